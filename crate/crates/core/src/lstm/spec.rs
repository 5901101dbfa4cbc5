use std::fmt;

use super::LstmError;

/// Declarative description of one baseline architecture.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ModelSpec {
    pub name: &'static str,
    pub lstm_units: usize,
    /// Dense head widths, last entry is the single output unit.
    pub dense_layout: &'static [usize],
    /// Input steps consumed per output.
    pub lookback: usize,
    pub bidirectional: bool,
    pub convolutional: bool,
}

/// Conv front-end: kernel 3, stride 1, one input channel to four.
pub const CONV_KERNEL: usize = 3;
pub const CONV_CHANNELS: usize = 4;

const fn row(
    name: &'static str,
    lstm_units: usize,
    dense_layout: &'static [usize],
    lookback: usize,
    bidirectional: bool,
    convolutional: bool,
) -> ModelSpec {
    ModelSpec {
        name,
        lstm_units,
        dense_layout,
        lookback,
        bidirectional,
        convolutional,
    }
}

/// The eight baselines. Where a name and its lookback column disagree
/// (`sLSTM-15-1,15`, `convLSTM-1-1,15`) the columns win.
pub const TABLE: [ModelSpec; 8] = [
    row("sLSTM-1-1", 100, &[1], 1, false, false),
    row("sLSTM-15-1", 100, &[1], 15, false, false),
    row("sLSTM-15-1,15", 100, &[15, 1], 1, false, false),
    row("biLSTM-1-1", 100, &[1], 1, true, false),
    row("biLSTM-15-1", 100, &[1], 15, true, false),
    row("biLSTM-15-1,15", 100, &[15, 1], 15, true, false),
    row("convLSTM-1-1", 60, &[1], 1, false, true),
    row("convLSTM-1-1,15", 64, &[1], 15, false, true),
];

impl ModelSpec {
    pub fn by_name(name: &str) -> Result<ModelSpec, LstmError> {
        TABLE
            .iter()
            .find(|s| s.name == name)
            .cloned()
            .ok_or_else(|| LstmError::UnknownSpec(name.to_string()))
    }

    pub fn all() -> &'static [ModelSpec] {
        &TABLE
    }

    /// Ok iff every field matches the table row of the same name.
    pub fn validate(&self) -> Result<(), LstmError> {
        match TABLE.iter().find(|s| s.name == self.name) {
            Some(row) if row == self => Ok(()),
            _ => Err(LstmError::UnknownSpec(self.name.to_string())),
        }
    }

    pub fn dense_description(&self) -> String {
        self.dense_layout
            .iter()
            .map(|w| format!("1x{w}"))
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Width of the per-step input the LSTM sees.
    pub fn lstm_input_width(&self) -> usize {
        if self.convolutional {
            CONV_CHANNELS
        } else {
            1
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} (units {}, dense {}, lookback {}, bidirectional {}, convolutional {})",
            self.name,
            self.lstm_units,
            self.dense_description(),
            self.lookback,
            self.bidirectional,
            self.convolutional
        )
    }
}
