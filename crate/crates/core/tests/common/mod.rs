//! Fixtures, naive oracles and criterion checks shared by the integration
//! tests and the acceptance runner.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fxbench::bench::{render_timing_table, run_bench, run_model, time_run, BenchConfig, Environment, ModelRef, RunStatus, TimingRecord};
use fxbench::evaluation::{aggregate, classify_signal, DecimalSeparator, SignalClass, SignalOutcome, Tally, Verdict, OVERALL};
use fxbench::indicators::{cci, moving_average, price_oscillator, rsi, williams_r, CCI_CONSTANT};
use fxbench::lstm::cell::{lstm_cell_backward, lstm_cell_forward_cached, LstmGrads, LstmState, LstmWeights};
use fxbench::lstm::layers::{conv1d_backward, conv1d_forward, dense_backward, dense_forward, relu, relu_backward, Conv1dShape};
use fxbench::lstm::model::{backward_with, forward_with, Layout};
use fxbench::paired_ann::Mlp;
use fxbench::signal::{read_signal_log, Direction, ForecastSignal, MAX_INTENSITY};
use fxbench::tickdata::{remove_flat_areas, synthesize_series, PricePoint, PriceSeries};

pub type Criterion = Result<String, String>;

pub fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn config_path(name: &str) -> PathBuf {
    manifest_dir().join("configs").join(name)
}

// ---------------------------------------------------------------------------
// Recorded quality and timing tables

pub const MONTHS: [&str; 3] = ["2021-10", "2021-11", "2021-12"];

/// Per month: STA successful, STA total, STS successful, STS total.
pub struct QualityFixture {
    pub model: &'static str,
    pub counts: [[u64; 4]; 3],
    /// Per month: STA and STS percentages as printed (comma decimals).
    pub printed: [[&'static str; 2]; 3],
}

const fn q(model: &'static str, counts: [[u64; 4]; 3], printed: [[&'static str; 2]; 3]) -> QualityFixture {
    QualityFixture { model, counts, printed }
}

pub const QUALITY_FIXTURES: [QualityFixture; 9] = [
    q(
        "custom-ann",
        [[3808, 4641, 310, 407], [10923, 13371, 880, 1070], [10989, 13689, 437, 593]],
        [["82,05", "76,17"], ["81,69", "82,24"], ["80,28", "73,69"]],
    ),
    q(
        "sLSTM-1-1",
        [[761, 1091, 101, 161], [831, 1133, 161, 237], [1419, 1921, 253, 424]],
        [["69,75", "62,73"], ["73,35", "67,93"], ["73,87", "59,67"]],
    ),
    q(
        "sLSTM-15-1",
        [[769, 1122, 96, 158], [483, 653, 80, 115], [1334, 1803, 224, 372]],
        [["68,54", "60,76"], ["73,97", "69,57"], ["73,99", "60,22"]],
    ),
    q(
        "sLSTM-15-1,15",
        [[782, 1133, 100, 164], [310, 416, 58, 80], [1393, 1892, 248, 418]],
        [["69,02", "60,98"], ["74,52", "72,50"], ["73,63", "59,33"]],
    ),
    q(
        "biLSTM-1-1",
        [[779, 1122, 105, 167], [760, 1033, 142, 213], [1413, 1915, 249, 420]],
        [["69,43", "62,87"], ["73,57", "66,67"], ["73,79", "59,29"]],
    ),
    q(
        "biLSTM-15-1",
        [[848, 1244, 113, 197], [462, 621, 77, 109], [1344, 1823, 238, 401]],
        [["68,17", "57,36"], ["74,40", "70,64"], ["73,72", "59,35"]],
    ),
    q(
        "biLSTM-15-1,15",
        [[821, 1199, 110, 191], [289, 378, 50, 68], [1397, 1909, 259, 439]],
        [["68,47", "57,59"], ["76,46", "73,53"], ["73,18", "59,00"]],
    ),
    q(
        "convLSTM-1-1",
        [[781, 1125, 107, 169], [968, 1330, 203, 314], [1350, 1829, 240, 402]],
        [["69,42", "63,31"], ["72,78", "64,65"], ["73,81", "59,70"]],
    ),
    q(
        "convLSTM-1-1,15",
        [[352, 471, 37, 51], [106, 148, 24, 36], [894, 1179, 104, 165]],
        [["74,73", "72,55"], ["71,62", "66,67"], ["75,83", "63,03"]],
    ),
];

/// Overall STA figures quoted alongside the table: (model, total, percent).
pub const QUALITY_OVERALL: [(&str, u64, &str); 2] = [("custom-ann", 31701, "81.13"), ("sLSTM-1-1", 4145, "72.64")];

/// Seconds per month and the overall sum.
pub const TIMING_FIXTURES: [(&str, [u64; 3], u64); 9] = [
    ("sLSTM-1-1", [117, 89, 116], 322),
    ("sLSTM-15-1", [227, 170, 226], 623),
    ("sLSTM-15-1,15", [233, 179, 232], 644),
    ("biLSTM-1-1", [142, 109, 141], 392),
    ("biLSTM-15-1", [282, 212, 279], 773),
    ("biLSTM-15-1,15", [287, 217, 290], 794),
    ("convLSTM-1-1", [195, 149, 193], 537),
    ("convLSTM-1-1,15", [302, 233, 302], 837),
    ("custom-ann", [32, 24, 32], 88),
];

pub fn month_start_ms(month: &str) -> i64 {
    match month {
        "2021-10" => 1_633_046_400_000,
        "2021-11" => 1_635_724_800_000,
        "2021-12" => 1_638_316_800_000,
        other => panic!("no fixture month {other}"),
    }
}

pub fn signal(model: &str, index: usize, timestamp_ms: i64, intensity: f64) -> ForecastSignal {
    ForecastSignal {
        index,
        timestamp_ms,
        direction: Direction::of(intensity).unwrap_or(Direction::Up),
        intensity,
        model_label: model.to_string(),
    }
}

pub fn outcome(model: &str, period: &str, intensity: f64, verdict: Verdict) -> SignalOutcome {
    SignalOutcome {
        signal: signal(model, 0, month_start_ms_or_zero(period), intensity),
        verdict,
        realized_move: 0.0,
        period: period.to_string(),
    }
}

fn month_start_ms_or_zero(period: &str) -> i64 {
    if MONTHS.contains(&period) {
        month_start_ms(period)
    } else {
        0
    }
}

/// Outcomes whose counts reproduce one fixture row exactly.
pub fn outcomes_for(fixture: &QualityFixture) -> Vec<SignalOutcome> {
    let mut out = Vec::new();
    for (month, &[sta_s, sta_t, sts_s, sts_t]) in MONTHS.iter().zip(&fixture.counts) {
        let weak_s = sta_s - sts_s;
        let weak_f = (sta_t - sta_s) - (sts_t - sts_s);
        let groups = [
            (sts_s, 1.5, Verdict::Success),
            (sts_t - sts_s, -2.0, Verdict::Failure),
            (weak_s, 0.5, Verdict::Success),
            (weak_f, -0.75, Verdict::Failure),
        ];
        for (count, intensity, verdict) in groups {
            out.extend((0..count).map(|_| outcome(fixture.model, month, intensity, verdict)));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Naive indicator oracles, recomputed from scratch at every index

pub fn naive_ma(p: &[f64], w: usize, i: usize) -> f64 {
    p[i + 1 - w..=i].iter().sum::<f64>() / w as f64
}

pub fn naive_rsi(p: &[f64], period: usize, i: usize) -> f64 {
    let (mut gain, mut loss, mut ups, mut downs) = (0.0, 0.0, 0, 0);
    for k in i + 1 - period..=i {
        let d = p[k] - p[k - 1];
        if d > 0.0 {
            gain += d;
            ups += 1;
        } else if d < 0.0 {
            loss -= d;
            downs += 1;
        }
    }
    match (ups, downs) {
        (0, 0) => 50.0,
        (_, 0) => 100.0,
        (0, _) => 0.0,
        _ => {
            let (g, l) = (gain / period as f64, loss / period as f64);
            100.0 - 100.0 / (1.0 + g / l)
        }
    }
}

pub fn naive_cci(p: &[f64], period: usize, i: usize) -> f64 {
    let w = &p[i + 1 - period..=i];
    let sma = w.iter().sum::<f64>() / period as f64;
    let md = w.iter().map(|x| (x - sma).abs()).sum::<f64>() / period as f64;
    if w.iter().all(|&x| x == w[0]) || md == 0.0 {
        0.0
    } else {
        (p[i] - sma) / (CCI_CONSTANT * md)
    }
}

pub fn naive_williams(p: &[f64], period: usize, i: usize) -> f64 {
    let w = &p[i + 1 - period..=i];
    let hh = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ll = w.iter().copied().fold(f64::INFINITY, f64::min);
    if hh == ll {
        -50.0
    } else {
        -100.0 * (hh - p[i]) / (hh - ll)
    }
}

pub fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

fn compare(name: &str, got: &[f64], first: usize, naive: impl Fn(usize) -> f64) -> Result<usize, String> {
    for (k, &g) in got.iter().enumerate() {
        let i = first + k;
        let want = naive(i);
        if !close(g, want) {
            return Err(format!("{name} at index {i}: streaming {g}, naive {want}"));
        }
    }
    Ok(got.len())
}

/// Random walk plus a copy quantized to 0.1 pip, so ties and flat windows occur.
pub fn oracle_series(seed: u64, len: usize) -> (Vec<f64>, Vec<f64>) {
    let raw = synthesize_series(seed, len, 1.1, 0.0001).expect("synthetic series").mids();
    let quantized = raw.iter().map(|p| (p * 1e5).round() / 1e5).collect();
    (raw, quantized)
}

pub fn check_indicators(p: &[f64], windows: &[usize]) -> Result<usize, String> {
    let mut checked = 0;
    let fail = |e: fxbench::indicators::IndicatorError| e.to_string();
    for &w in windows {
        checked += compare(&format!("ma{w}"), &moving_average(p.iter().copied(), w).map_err(fail)?, w - 1, |i| naive_ma(p, w, i))?;
        checked += compare(&format!("rsi{w}"), &rsi(p.iter().copied(), w).map_err(fail)?, w, |i| naive_rsi(p, w, i))?;
        checked += compare(&format!("cci{w}"), &cci(p.iter().copied(), w).map_err(fail)?, w - 1, |i| naive_cci(p, w, i))?;
        checked += compare(&format!("williams{w}"), &williams_r(p.iter().copied(), w).map_err(fail)?, w - 1, |i| {
            naive_williams(p, w, i)
        })?;
    }
    let longest = *windows.iter().max().expect("windows");
    let osc = price_oscillator(p.iter().copied(), windows).map_err(fail)?;
    for (k, row) in osc.iter().enumerate() {
        let i = longest - 1 + k;
        for (j, &w) in windows[1..].iter().enumerate() {
            let want = naive_ma(p, windows[0], i) - naive_ma(p, w, i);
            if !close(row[j], want) {
                return Err(format!("oscillator {}-{w} at index {i}: streaming {}, naive {want}", windows[0], row[j]));
            }
            checked += 1;
        }
    }
    Ok(checked)
}

// ---------------------------------------------------------------------------
// Finite-difference gradient checks

pub const FD_STEP: f64 = 1e-5;
pub const FD_TOLERANCE: f64 = 1e-4;

/// Largest relative error between `analytic` and central differences of `f`.
pub fn max_relative_error(f: impl Fn(&[f64]) -> f64, theta: &[f64], analytic: &[f64]) -> Result<f64, String> {
    if theta.len() != analytic.len() {
        return Err(format!("gradient has {} entries for {} parameters", analytic.len(), theta.len()));
    }
    let mut probe = theta.to_vec();
    let mut worst: f64 = 0.0;
    for k in 0..theta.len() {
        probe[k] = theta[k] + FD_STEP;
        let up = f(&probe);
        probe[k] = theta[k] - FD_STEP;
        let down = f(&probe);
        probe[k] = theta[k];
        let numeric = (up - down) / (2.0 * FD_STEP);
        let a = analytic[k];
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
        if rel >= FD_TOLERANCE {
            return Err(format!("parameter {k}: analytic {a}, numeric {numeric}, relative error {rel:.2e}"));
        }
        worst = worst.max(rel);
    }
    Ok(worst)
}

fn uniform(rng: &mut ChaCha8Rng, n: usize, bound: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-bound..bound)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// One LSTM step, loss `r_h . h + r_c . c`; checks weights, input and
/// incoming state.
pub fn grad_lstm_cell(seed: u64) -> Result<f64, String> {
    let (input, units) = (3, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_w = LstmWeights::param_count(input, units);
    let theta = uniform(&mut rng, n_w + input + 2 * units, 0.8);
    let (r_h, r_c) = (uniform(&mut rng, units, 1.0), uniform(&mut rng, units, 1.0));
    let split = |t: &[f64]| -> (Vec<f64>, Vec<f64>, LstmState) {
        let (w, rest) = t.split_at(n_w);
        let (x, state) = rest.split_at(input);
        let (h, c) = state.split_at(units);
        (w.to_vec(), x.to_vec(), LstmState { hidden: h.to_vec(), cell: c.to_vec() })
    };
    let loss = |t: &[f64]| {
        let (w, x, s) = split(t);
        let cache = lstm_cell_forward_cached(&x, &s, &LstmWeights::from_block(&w, input, units)).expect("cell");
        dot(&r_h, &cache.hidden) + dot(&r_c, &cache.cell)
    };
    let (w, x, s) = split(&theta);
    let weights = LstmWeights::from_block(&w, input, units);
    let cache = lstm_cell_forward_cached(&x, &s, &weights).map_err(|e| e.to_string())?;
    let mut analytic = vec![0.0; theta.len()];
    let (gw, rest) = analytic.split_at_mut(n_w);
    let (gx, gstate) = rest.split_at_mut(input);
    let mut grads = LstmGrads::from_block(gw, input, units);
    let (dh_prev, dc_prev) = lstm_cell_backward(&cache, &weights, &r_h, &r_c, &mut grads, Some(gx));
    gstate[..units].copy_from_slice(&dh_prev);
    gstate[units..].copy_from_slice(&dc_prev);
    max_relative_error(loss, &theta, &analytic)
}

/// `r . (W x + b)`.
pub fn grad_dense(seed: u64) -> Result<f64, String> {
    let (inputs, outputs) = (5, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let theta = uniform(&mut rng, outputs * inputs + outputs + inputs, 1.0);
    let r = uniform(&mut rng, outputs, 1.0);
    let split = |t: &[f64]| {
        let (w, rest) = t.split_at(outputs * inputs);
        let (b, x) = rest.split_at(outputs);
        (w.to_vec(), b.to_vec(), x.to_vec())
    };
    let loss = |t: &[f64]| {
        let (w, b, x) = split(t);
        dot(&r, &dense_forward(&w, &b, &x))
    };
    let (w, _, x) = split(&theta);
    let mut analytic = vec![0.0; theta.len()];
    let (dw, rest) = analytic.split_at_mut(outputs * inputs);
    let (db, dx_out) = rest.split_at_mut(outputs);
    let dx = dense_backward(&w, &x, &r, dw, db);
    dx_out.copy_from_slice(&dx);
    max_relative_error(loss, &theta, &analytic)
}

/// `r . relu(W x + b)`, pre-activations kept clear of the kink.
pub fn grad_dense_relu(seed: u64) -> Result<f64, String> {
    let (inputs, outputs) = (4, 6);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (theta, r) = loop {
        let theta = uniform(&mut rng, outputs * inputs + outputs + inputs, 1.0);
        let r = uniform(&mut rng, outputs, 1.0);
        let (w, rest) = theta.split_at(outputs * inputs);
        let (b, x) = rest.split_at(outputs);
        if dense_forward(w, b, x).iter().all(|z| z.abs() > 1e-3) {
            break (theta, r);
        }
    };
    let split = |t: &[f64]| {
        let (w, rest) = t.split_at(outputs * inputs);
        let (b, x) = rest.split_at(outputs);
        (w.to_vec(), b.to_vec(), x.to_vec())
    };
    let loss = |t: &[f64]| {
        let (w, b, x) = split(t);
        dot(&r, &relu(&dense_forward(&w, &b, &x)))
    };
    let (w, b, x) = split(&theta);
    let z = dense_forward(&w, &b, &x);
    let dz = relu_backward(&z, &r);
    let mut analytic = vec![0.0; theta.len()];
    let (dw, rest) = analytic.split_at_mut(outputs * inputs);
    let (db, dx_out) = rest.split_at_mut(outputs);
    let dx = dense_backward(&w, &x, &dz, dw, db);
    dx_out.copy_from_slice(&dx);
    max_relative_error(loss, &theta, &analytic)
}

/// `r . conv(x)` for a two-channel same-padded convolution.
pub fn grad_conv(seed: u64) -> Result<f64, String> {
    let shape = Conv1dShape {
        in_channels: 2,
        out_channels: 3,
        kernel: 3,
    };
    let steps = 6;
    let n_w = shape.weight_count();
    let n_x = steps * shape.in_channels;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let theta = uniform(&mut rng, n_w + shape.out_channels + n_x, 1.0);
    let r = uniform(&mut rng, steps * shape.out_channels, 1.0);
    let split = |t: &[f64]| {
        let (w, rest) = t.split_at(n_w);
        let (b, x) = rest.split_at(shape.out_channels);
        (w.to_vec(), b.to_vec(), x.to_vec())
    };
    let loss = |t: &[f64]| {
        let (w, b, x) = split(t);
        dot(&r, &conv1d_forward(shape, &w, &b, &x))
    };
    let (w, _, x) = split(&theta);
    let mut analytic = vec![0.0; theta.len()];
    let (dw, rest) = analytic.split_at_mut(n_w);
    let (db, dx_out) = rest.split_at_mut(shape.out_channels);
    let dx = conv1d_backward(shape, &w, &x, &r, dw, db);
    dx_out.copy_from_slice(&dx);
    max_relative_error(loss, &theta, &analytic)
}

/// Whole-model check through `forward_with`/`backward_with`; draws whose
/// ReLU pre-activations sit near zero are redrawn.
pub fn grad_model(layout: &Layout, seed: u64, steps: usize) -> Result<f64, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (params, window) = loop {
        let params = uniform(&mut rng, layout.param_count, 0.6);
        let window = uniform(&mut rng, steps, 2.0);
        let cache = forward_with(layout, &params, &window).map_err(|e| e.to_string())?;
        let clear = |v: &[f64]| v.iter().all(|z| z.abs() > 1e-3);
        let dense_clear = layout.dense.iter().zip(&cache.dense_pre).all(|(b, z)| !b.relu || clear(z));
        if clear(&cache.conv_pre) && dense_clear {
            break (params, window);
        }
    };
    let loss = |p: &[f64]| forward_with(layout, p, &window).expect("forward").output;
    let cache = forward_with(layout, &params, &window).map_err(|e| e.to_string())?;
    let mut analytic = vec![0.0; params.len()];
    backward_with(layout, &params, &cache, 1.0, &mut analytic);
    max_relative_error(loss, &params, &analytic)
}

pub fn bidirectional_layout() -> Layout {
    Layout::build(false, 3, true, &[2, 1])
}

pub fn conv_layout() -> Layout {
    Layout::build(true, 3, false, &[1])
}

/// Mean squared error of a tanh MLP shaped like one paired-ANN trainer.
pub fn grad_mlp(seed: u64) -> Result<f64, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sizes = [3, 8, 1];
    let mlp = Mlp::uniform(&sizes, &mut rng);
    let samples = 6;
    let inputs = uniform(&mut rng, samples * sizes[0], 1.0);
    let targets = uniform(&mut rng, samples, 1.0);
    let (_, grad) = mlp.gradient(&inputs, &targets);
    let loss = |p: &[f64]| {
        let mut m = mlp.clone();
        m.set_params(p);
        m.loss(&inputs, &targets)
    };
    max_relative_error(loss, &mlp.params(), &grad.flat())
}

pub const GRADIENT_SEEDS: [u64; 3] = [11, 22, 33];

pub type GradientCase = Box<dyn Fn(u64) -> Result<f64, String>>;

pub fn gradient_cases() -> Vec<(&'static str, GradientCase)> {
    vec![
        ("lstm cell", Box::new(grad_lstm_cell)),
        ("dense", Box::new(grad_dense)),
        ("dense+relu", Box::new(grad_dense_relu)),
        ("conv1d", Box::new(grad_conv)),
        ("bidirectional model", Box::new(|s| grad_model(&bidirectional_layout(), s, 4))),
        ("conv model", Box::new(|s| grad_model(&conv_layout(), s, 5))),
        ("paired-ann mlp", Box::new(grad_mlp)),
    ]
}

// ---------------------------------------------------------------------------
// Evaluation and preprocessing generators

pub fn random_outcomes(seed: u64, n: usize) -> Vec<SignalOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let models = ["custom-ann", "sLSTM-1-1", "convLSTM-1-1"];
    let intensities = [-3.0, -1.0, -0.999, -0.25, 0.25, 0.5, 0.999, 1.0, 2.0, 3.0];
    (0..n)
        .map(|_| {
            let model = models[rng.random_range(0..models.len())];
            let period = MONTHS[rng.random_range(0..MONTHS.len())];
            let intensity = intensities[rng.random_range(0..intensities.len())];
            let verdict = [Verdict::Success, Verdict::Failure, Verdict::Excluded][rng.random_range(0..3)];
            outcome(model, period, intensity, verdict)
        })
        .collect()
}

/// Recount by scanning every outcome once per report cell.
pub fn brute_force_counts(outcomes: &[SignalOutcome]) -> BTreeMap<(String, String), (Tally, Tally)> {
    let mut keys: Vec<(String, String)> = Vec::new();
    for o in outcomes.iter().filter(|o| o.verdict != Verdict::Excluded) {
        for period in [o.period.clone(), OVERALL.to_string()] {
            let key = (o.signal.model_label.clone(), period);
            if !keys.contains(&key) {
                keys.push(key);
            }
        }
    }
    keys.into_iter()
        .map(|(model, period)| {
            let mut sta = Tally::default();
            let mut sts = Tally::default();
            for o in outcomes {
                let counted = o.verdict != Verdict::Excluded
                    && o.signal.model_label == model
                    && (period == OVERALL || o.period == period);
                if !counted {
                    continue;
                }
                let success = u64::from(o.verdict == Verdict::Success);
                sta.total += 1;
                sta.successful += success;
                if o.signal.intensity.abs() >= 1.0 {
                    sts.total += 1;
                    sts.successful += success;
                }
            }
            ((model, period), (sta, sts))
        })
        .collect()
}

/// Random series; every tenth is constant, every tenth (offset one) has no
/// repeated neighbours, the rest draw from a three-price alphabet.
pub fn random_preprocessing_series(seed: u64) -> PriceSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = rng.random_range(1..200);
    let alphabet = [1.1000, 1.1001, 1.1002];
    let mids: Vec<f64> = match seed % 10 {
        0 => vec![alphabet[1]; len],
        1 => {
            let mut v: Vec<f64> = Vec::with_capacity(len);
            let mut p = 1.1;
            for _ in 0..len {
                p += if rng.random_bool(0.5) { 0.0001 } else { -0.0001 };
                v.push(p);
            }
            v
        }
        _ => (0..len).map(|_| alphabet[rng.random_range(0..alphabet.len())]).collect(),
    };
    PriceSeries::from_mids(&mids, format!("case-{seed}"))
}

pub fn check_preprocessing(series: &PriceSeries) -> Result<(), String> {
    let once = remove_flat_areas(series).map_err(|e| e.to_string())?;
    let twice = remove_flat_areas(&once).map_err(|e| e.to_string())?;
    if once != twice {
        return Err(format!("{}: not idempotent", series.source_label));
    }
    if once.points.windows(2).any(|w| w[0].mid == w[1].mid) {
        return Err(format!("{}: consecutive equal values remain", series.source_label));
    }
    // each kept point opens a run of the input
    let expected: Vec<PricePoint> = series
        .points
        .iter()
        .enumerate()
        .filter(|(i, p)| *i == 0 || series.points[i - 1].mid != p.mid)
        .map(|(_, p)| *p)
        .collect();
    if once.points != expected {
        return Err(format!("{}: kept points are not the run openers", series.source_label));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Acceptance criteria

fn rows_match(fixture: &QualityFixture, report: &fxbench::evaluation::QualityReport) -> Result<usize, String> {
    let mut checked = 0;
    for (k, month) in MONTHS.iter().enumerate() {
        let row = report
            .get(fixture.model, month)
            .ok_or_else(|| format!("{} {month}: missing row", fixture.model))?;
        let [sta_s, sta_t, sts_s, sts_t] = fixture.counts[k];
        if row.sta != Tally::new(sta_s, sta_t) || row.sts != Tally::new(sts_s, sts_t) {
            return Err(format!("{} {month}: counts {:?} / {:?}", fixture.model, row.sta, row.sts));
        }
        for (tally, printed) in [row.sta, row.sts].iter().zip(fixture.printed[k]) {
            let got = tally.percent(DecimalSeparator::Comma);
            if got != printed {
                return Err(format!("{} {month}: {got}% instead of {printed}%", fixture.model));
            }
            checked += 1;
        }
    }
    Ok(checked)
}

pub fn criterion_metric_fixtures() -> Criterion {
    let outcomes: Vec<SignalOutcome> = QUALITY_FIXTURES.iter().flat_map(outcomes_for).collect();
    let report = aggregate(&outcomes);
    let mut checked = 0;
    for fixture in &QUALITY_FIXTURES {
        checked += rows_match(fixture, &report)?;
    }
    for (model, total, pct) in QUALITY_OVERALL {
        let row = report.get(model, OVERALL).ok_or_else(|| format!("{model}: no overall row"))?;
        let got = row.sta.percent(DecimalSeparator::Dot);
        if row.sta.total != total || got != pct {
            return Err(format!("{model} overall: {} signals at {got}%, expected {total} at {pct}%", row.sta.total));
        }
        checked += 1;
    }
    Ok(format!("{checked} percentages reproduced from {} outcomes", outcomes.len()))
}

pub fn fixture_records(environment: &Environment) -> Vec<TimingRecord> {
    TIMING_FIXTURES
        .iter()
        .flat_map(|(model, cells, _)| {
            MONTHS.iter().zip(cells).map(move |(month, &secs)| TimingRecord {
                model_label: model.to_string(),
                period_label: month.to_string(),
                wall_seconds: secs as f64,
                peak_memory_mib: 0.0,
                environment: environment.clone(),
                status: RunStatus::Ok,
            })
        })
        .collect()
}

pub fn criterion_timing_fixtures() -> Criterion {
    let mut records = fixture_records(&Environment::capture());
    // record order must not matter
    records.reverse();
    records.rotate_left(7);
    let table = render_timing_table(&records).map_err(|e| e.to_string())?;
    if table.periods != MONTHS {
        return Err(format!("periods {:?}", table.periods));
    }
    for (model, cells, overall) in TIMING_FIXTURES {
        let row = table.row(model).ok_or_else(|| format!("{model}: missing row"))?;
        let want: Vec<Option<u64>> = cells.iter().map(|s| Some(s * 1000)).collect();
        if row.cells_ms != want || row.overall_ms != Some(overall * 1000) {
            return Err(format!("{model}: cells {:?}, overall {:?}, expected overall {overall} s", row.cells_ms, row.overall_ms));
        }
    }
    Ok(format!("{} overall values reproduced", TIMING_FIXTURES.len()))
}

pub fn criterion_gradients() -> Criterion {
    let mut worst: f64 = 0.0;
    let mut checks = 0;
    for (name, case) in gradient_cases() {
        for seed in GRADIENT_SEEDS {
            let err = case(seed).map_err(|e| format!("{name}, seed {seed}: {e}"))?;
            worst = worst.max(err);
            checks += 1;
        }
    }
    Ok(format!("{checks} checks, worst relative error {worst:.2e}"))
}

pub fn criterion_indicator_oracle() -> Criterion {
    let (raw, quantized) = oracle_series(2024, 10_000);
    let mut checked = check_indicators(&raw, &[300, 600, 900])?;
    checked += check_indicators(&raw, &[5, 14, 50])?;
    checked += check_indicators(&quantized, &[3, 5, 14])?;
    Ok(format!("{checked} streaming values agree within 1e-9"))
}

pub fn criterion_evaluation_oracle() -> Criterion {
    let outcomes = random_outcomes(99, 1000);
    let report = aggregate(&outcomes);
    let brute = brute_force_counts(&outcomes);
    if report.rows.len() != brute.len() {
        return Err(format!("{} report rows, brute force found {}", report.rows.len(), brute.len()));
    }
    for ((model, period), (sta, sts)) in &brute {
        let row = report.get(model, period).ok_or_else(|| format!("missing row {model}/{period}"))?;
        if row.sta != *sta || row.sts != *sts {
            return Err(format!("{model}/{period}: {:?}/{:?} vs brute force {sta:?}/{sts:?}", row.sta, row.sts));
        }
    }
    let robust = outcomes.iter().filter(|o| classify_signal(&o.signal) == SignalClass::Robust).count();
    Ok(format!("{} cells agree over 1000 outcomes ({robust} robust)", brute.len()))
}

pub fn criterion_preprocessing() -> Criterion {
    for seed in 0..1000 {
        check_preprocessing(&random_preprocessing_series(seed))?;
    }
    Ok("1000 series idempotent and flat-free".to_string())
}

pub fn default_config() -> Result<BenchConfig, String> {
    BenchConfig::load(config_path("default.toml")).map_err(|e| e.to_string())
}

/// Median end-to-end seconds of one model on one series.
pub fn end_to_end_seconds(model: &ModelRef, series: &PriceSeries, cfg: &BenchConfig, reps: usize) -> Result<f64, String> {
    let env = Environment::capture();
    let (record, _) = time_run(model.label(), &series.source_label, reps, &env, || run_model(model, series, cfg))
        .map_err(|e| e.to_string())?;
    match record.status {
        RunStatus::Ok => Ok(record.wall_seconds),
        RunStatus::Failed(why) => Err(format!("{} failed: {why}", model.label())),
    }
}

pub fn criterion_directional_timing() -> Criterion {
    let cfg = default_config()?;
    let series = cfg.load_dataset(&cfg.datasets[0]).map_err(|e| e.to_string())?;
    if series.len() != 20_000 {
        return Err(format!("expected a 20000-tick series, got {}", series.len()));
    }
    let ann = end_to_end_seconds(&ModelRef::CustomAnn, &series, &cfg, 3)?;
    let mut fastest: Option<(&str, f64)> = None;
    for model in ModelRef::all().iter().filter(|m| matches!(m, ModelRef::Lstm(_))) {
        let secs = end_to_end_seconds(model, &series, &cfg, 1)?;
        if fastest.is_none_or(|(_, best)| secs < best) {
            fastest = Some((model.label(), secs));
        }
    }
    let (name, lstm) = fastest.ok_or("no LSTM timed")?;
    let ratio = lstm / ann;
    let detail = format!("custom ANN {ann:.3} s, fastest LSTM {name} {lstm:.3} s, ratio {ratio:.2}x");
    if ratio >= 3.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn validate_signal_log(path: &Path, model: &str, cfg: &BenchConfig, len: usize) -> Result<usize, String> {
    let file = std::fs::File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let log = read_signal_log(file).map_err(|e| format!("{}: {e}", path.display()))?;
    let threshold = cfg.emission.threshold;
    for w in log.windows(2) {
        if w[1].index <= w[0].index {
            return Err(format!("{}: indices not increasing", path.display()));
        }
    }
    for s in &log {
        let ok = s.model_label == model
            && s.index < len
            && s.intensity.abs() >= threshold
            && s.intensity.abs() <= MAX_INTENSITY
            && Direction::of(s.intensity) == Some(s.direction);
        if !ok {
            return Err(format!("{}: invalid signal {s:?}", path.display()));
        }
    }
    if log.is_empty() {
        return Err(format!("{}: no signals", path.display()));
    }
    Ok(log.len())
}

pub fn criterion_smoke_matrix() -> Criterion {
    let started = Instant::now();
    let cfg = BenchConfig::load(config_path("smoke.toml")).map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let outcome = run_bench(&cfg, dir.path()).map_err(|e| e.to_string())?;
    if let Some(r) = outcome.failures().next() {
        return Err(format!("{} failed: {:?}", r.model_label, r.status));
    }
    let series = cfg.load_dataset(&cfg.datasets[0]).map_err(|e| e.to_string())?;
    let models = ModelRef::all();
    if outcome.records.len() != models.len() {
        return Err(format!("{} timing records for {} models", outcome.records.len(), models.len()));
    }
    let mut signals = 0;
    for model in &models {
        let path = dir.path().join(fxbench::bench::runner::signal_file_name(model.label(), &series.source_label));
        signals += validate_signal_log(&path, model.label(), &cfg, series.len())?;
        if outcome.quality.get(model.label(), OVERALL).is_none() {
            return Err(format!("{}: no quality row", model.label()));
        }
    }
    use fxbench::bench::runner::{FIGURE1_FILE, FIGURE2_FILE, QUALITY_FILE, REPORT_FILE, TIMING_FILE};
    for name in [TIMING_FILE, QUALITY_FILE, FIGURE1_FILE, FIGURE2_FILE] {
        let text = std::fs::read_to_string(dir.path().join(name)).map_err(|e| format!("{name}: {e}"))?;
        if !text.starts_with("# environment: ") {
            return Err(format!("{name}: no environment header"));
        }
    }
    let report = std::fs::read_to_string(dir.path().join(REPORT_FILE)).map_err(|e| format!("{REPORT_FILE}: {e}"))?;
    if !report.contains("environment: ") || !report.contains("| Name |") {
        return Err(format!("{REPORT_FILE}: incomplete"));
    }
    Ok(format!(
        "{} models, {signals} signals, report bundle complete in {:.1} s",
        models.len(),
        started.elapsed().as_secs_f64()
    ))
}

/// Signal logs and quality.csv of one bench directory, by file name.
pub fn deterministic_outputs(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        if name.starts_with("signals_") || name == fxbench::bench::runner::QUALITY_FILE {
            out.insert(name, std::fs::read(&path).map_err(|e| e.to_string())?);
        }
    }
    Ok(out)
}

pub fn bench_with_binary(config: &Path, seed: u64, out: &Path) -> Result<(), String> {
    let status = std::process::Command::new(env!("CARGO_BIN_EXE_fxbench"))
        .arg("--config")
        .arg(config)
        .args(["--seed", &seed.to_string(), "--format", "csv", "--out"])
        .arg(out)
        .arg("bench")
        .output()
        .map_err(|e| e.to_string())?;
    if !status.status.success() {
        return Err(format!("bench exited with {:?}: {}", status.status.code(), String::from_utf8_lossy(&status.stderr)));
    }
    Ok(())
}

pub fn criterion_determinism() -> Criterion {
    let config = config_path("smoke.toml");
    let (a, b) = (tempfile::tempdir().map_err(|e| e.to_string())?, tempfile::tempdir().map_err(|e| e.to_string())?);
    bench_with_binary(&config, 42, a.path())?;
    bench_with_binary(&config, 42, b.path())?;
    let (first, second) = (deterministic_outputs(a.path())?, deterministic_outputs(b.path())?);
    if first.len() < 2 {
        return Err(format!("only {} comparable files", first.len()));
    }
    if first != second {
        let differing: Vec<&String> = first.keys().filter(|k| first.get(*k) != second.get(*k)).collect();
        return Err(format!("outputs differ: {differing:?}"));
    }
    Ok(format!("{} files byte-identical across two runs", first.len()))
}
