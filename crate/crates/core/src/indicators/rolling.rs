use std::collections::VecDeque;

/// Fixed-length window with a running sum.
///
/// The sum is rebuilt from the buffer once per `capacity` pushes so that
/// add/subtract rounding cannot accumulate over long series.
#[derive(Debug, Clone)]
pub struct RollingWindow {
    buf: VecDeque<f64>,
    capacity: usize,
    sum: f64,
    since_rebuild: usize,
}

impl RollingWindow {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "window capacity must be at least 1");
        Self {
            buf: VecDeque::with_capacity(capacity + 1),
            capacity,
            sum: 0.0,
            since_rebuild: 0,
        }
    }

    /// Pushes a value and returns the evicted one, if the window was full.
    pub fn push(&mut self, value: f64) -> Option<f64> {
        self.buf.push_back(value);
        self.sum += value;
        let evicted = if self.buf.len() > self.capacity {
            let old = self.buf.pop_front();
            if let Some(old) = old {
                self.sum -= old;
            }
            old
        } else {
            None
        };
        self.since_rebuild += 1;
        if self.since_rebuild >= self.capacity {
            self.sum = self.buf.iter().sum();
            self.since_rebuild = 0;
        }
        evicted
    }

    pub fn is_full(&self) -> bool {
        self.buf.len() == self.capacity
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.sum
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.buf.len() as f64
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.buf.iter()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extremum {
    Max,
    Min,
}

/// Sliding-window maximum or minimum in O(1) amortized per step.
///
/// Holds `(index, value)` pairs whose values are monotone from front to
/// back; the front is the current extremum.
#[derive(Debug, Clone)]
pub struct MonotonicQueue {
    deque: VecDeque<(usize, f64)>,
    kind: Extremum,
}

impl MonotonicQueue {
    pub fn new(kind: Extremum) -> Self {
        Self {
            deque: VecDeque::new(),
            kind,
        }
    }

    pub fn push(&mut self, index: usize, value: f64) {
        while let Some(&(_, back)) = self.deque.back() {
            let dominated = match self.kind {
                Extremum::Max => back <= value,
                Extremum::Min => back >= value,
            };
            if !dominated {
                break;
            }
            self.deque.pop_back();
        }
        self.deque.push_back((index, value));
    }

    /// Drops entries with index < `oldest`.
    pub fn expire(&mut self, oldest: usize) {
        while self.deque.front().is_some_and(|&(i, _)| i < oldest) {
            self.deque.pop_front();
        }
    }

    pub fn extremum(&self) -> Option<f64> {
        self.deque.front().map(|&(_, v)| v)
    }

    pub fn len(&self) -> usize {
        self.deque.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deque.is_empty()
    }
}
