//! OFDM tone-grid physical layer.
//!
//! Transmit grids hold one energized tone per OFDM symbol, grids from
//! several users superpose linearly, and the channel applies per-tone
//! Rayleigh (or unit) gains plus complex Gaussian noise on every cell of
//! every receive antenna. Detection is post-combining energy thresholding,
//! and the Erlang closed forms for false alarm and erasure probabilities
//! live here next to the detector they describe.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::codec::StsCodeword;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum PhyError {
    #[error("tone index {index} outside grid with {s} subcarriers")]
    IndexOutOfGrid { index: u64, s: usize },
    #[error("grid dimensions do not match")]
    DimensionMismatch,
    #[error("superposition requires at least one grid")]
    EmptyInput,
    #[error("grid has no energized column")]
    EmptyGrid,
}

/// S subcarriers x N OFDM symbols of complex amplitudes, symbol-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ToneGrid {
    s: usize,
    n: usize,
    amp: Vec<Complex64>,
}

impl ToneGrid {
    pub fn zeros(s: usize, n: usize) -> ToneGrid {
        ToneGrid {
            s,
            n,
            amp: vec![Complex64::new(0.0, 0.0); s * n],
        }
    }

    /// Every cell energized at the given power. Not an STS transmit grid;
    /// used to feed the detector calibration with occupied-tone samples.
    pub fn flat(s: usize, n: usize, power: f64) -> ToneGrid {
        ToneGrid {
            s,
            n,
            amp: vec![Complex64::new(power.sqrt(), 0.0); s * n],
        }
    }

    pub fn subcarriers(&self) -> usize {
        self.s
    }

    pub fn symbols(&self) -> usize {
        self.n
    }

    pub fn at(&self, sub: usize, sym: usize) -> Complex64 {
        self.amp[sym * self.s + sub]
    }

    pub fn set(&mut self, sub: usize, sym: usize, v: Complex64) {
        self.amp[sym * self.s + sub] = v;
    }

    /// Indices of nonzero cells in one symbol column, ascending.
    pub fn occupied(&self, sym: usize) -> Vec<usize> {
        (0..self.s)
            .filter(|&sub| self.at(sub, sym).norm_sqr() > 0.0)
            .collect()
    }

    /// Count of nonzero cells per symbol, the signal's interference
    /// footprint on co-channel traffic.
    pub fn nonzero_per_symbol(&self) -> Vec<usize> {
        (0..self.n).map(|sym| self.occupied(sym).len()).collect()
    }
}

/// Maps a codeword onto a tone grid: amplitude sqrt(power) at
/// (c_n, n), zero elsewhere.
pub fn modulate(c: &StsCodeword, s: usize, power: f64) -> Result<ToneGrid, PhyError> {
    assert!(power > 0.0, "transmit power must be positive");
    let n = c.symbols().len();
    let mut grid = ToneGrid::zeros(s, n);
    for (sym, &el) in c.symbols().iter().enumerate() {
        let index = el.value();
        if index >= s as u64 {
            return Err(PhyError::IndexOutOfGrid { index, s });
        }
        grid.set(index as usize, sym, Complex64::new(power.sqrt(), 0.0));
    }
    Ok(grid)
}

/// Element-wise complex sum; tones on the same cell add coherently,
/// tones on distinct subcarriers stay orthogonal.
pub fn superpose(grids: &[ToneGrid]) -> Result<ToneGrid, PhyError> {
    let first = grids.first().ok_or(PhyError::EmptyInput)?;
    let mut out = first.clone();
    for g in &grids[1..] {
        if g.s != out.s || g.n != out.n {
            return Err(PhyError::DimensionMismatch);
        }
        for (acc, &v) in out.amp.iter_mut().zip(&g.amp) {
            *acc += v;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fading {
    Rayleigh,
    AwgnOnly,
}

/// Channel between one (or more) single-antenna senders and an N_r-antenna
/// receiver.
#[derive(Debug, Clone, Copy)]
pub struct ChannelConfig {
    pub n_rx: usize,
    pub n_tx: usize,
    /// Per-antenna complex noise variance sigma^2 (equal across antennas).
    pub noise_var: f64,
    pub fading: Fading,
    /// AR(1) coefficient coupling a user's fades across successive OFDM
    /// symbols; 0 gives independent fades per tone (the default), values
    /// near 1 collapse the frequency diversity of the N-symbol block.
    pub time_correlation: f64,
}

impl ChannelConfig {
    pub fn new(n_rx: usize, noise_var: f64, fading: Fading) -> ChannelConfig {
        let cfg = ChannelConfig {
            n_rx,
            n_tx: 1,
            noise_var,
            fading,
            time_correlation: 0.0,
        };
        cfg.validate();
        cfg
    }

    pub fn with_time_correlation(mut self, rho: f64) -> ChannelConfig {
        self.time_correlation = rho;
        self.validate();
        self
    }

    pub fn with_n_tx(mut self, n_tx: usize) -> ChannelConfig {
        self.n_tx = n_tx;
        self.validate();
        self
    }

    fn validate(&self) {
        assert!(self.n_rx >= 1, "need at least one receive antenna");
        assert!(self.n_tx >= 1, "need at least one transmit antenna");
        assert!(self.noise_var > 0.0, "noise variance must be positive");
        assert!(
            (0.0..1.0).contains(&self.time_correlation),
            "time correlation must lie in [0, 1)"
        );
    }
}

/// Per-antenna received grids y.
#[derive(Debug, Clone)]
pub struct ReceivedGrid {
    s: usize,
    n: usize,
    antennas: Vec<Vec<Complex64>>,
}

impl ReceivedGrid {
    pub fn n_rx(&self) -> usize {
        self.antennas.len()
    }

    pub fn at(&self, antenna: usize, sub: usize, sym: usize) -> Complex64 {
        self.antennas[antenna][sym * self.s + sub]
    }
}

/// Circularly symmetric complex Gaussian with E|x|^2 = var.
fn cn<R: Rng>(rng: &mut R, var: f64) -> Complex64 {
    let scale = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * scale, im * scale)
}

/// Passes several users' grids through independent fading channels to a
/// common receiver, then adds noise once per cell per antenna.
///
/// Rayleigh gains are CN(0,1), drawn independently per occupied tone and
/// antenna (or evolved as an AR(1) chain across symbols when
/// `time_correlation` > 0). With more than one transmit antenna the power
/// splits evenly across independently faded paths, preserving the
/// occupied-tone marginal CN(0, p + sigma^2).
pub fn apply_channel_multi<R: Rng>(
    grids: &[&ToneGrid],
    cfg: &ChannelConfig,
    rng: &mut R,
) -> Result<ReceivedGrid, PhyError> {
    cfg.validate();
    let first = grids.first().ok_or(PhyError::EmptyInput)?;
    let (s, n) = (first.s, first.n);
    if grids.iter().any(|g| g.s != s || g.n != n) {
        return Err(PhyError::DimensionMismatch);
    }

    let tx_scale = 1.0 / (cfg.n_tx as f64).sqrt();
    let rho = cfg.time_correlation;
    let innov = (1.0 - rho * rho).sqrt();

    // occupied-cell lists, computed once rather than per antenna
    let occupied: Vec<Vec<Vec<usize>>> = grids
        .iter()
        .map(|g| (0..n).map(|sym| g.occupied(sym)).collect())
        .collect();

    let mut antennas = Vec::with_capacity(cfg.n_rx);
    for _ in 0..cfg.n_rx {
        let mut y = vec![Complex64::new(0.0, 0.0); s * n];
        for (g, occ) in grids.iter().zip(&occupied) {
            match cfg.fading {
                Fading::AwgnOnly => {
                    for (sym, subs) in occ.iter().enumerate() {
                        for &sub in subs {
                            let idx = sym * s + sub;
                            y[idx] += g.amp[idx];
                        }
                    }
                }
                Fading::Rayleigh if rho == 0.0 => {
                    for (sym, subs) in occ.iter().enumerate() {
                        for &sub in subs {
                            let idx = sym * s + sub;
                            let mut faded = Complex64::new(0.0, 0.0);
                            for _ in 0..cfg.n_tx {
                                faded += cn(rng, 1.0) * (g.amp[idx] * tx_scale);
                            }
                            y[idx] += faded;
                        }
                    }
                }
                Fading::Rayleigh => {
                    // one gain chain per transmit path, shared by the
                    // user's tone within each symbol
                    let mut h: Vec<Complex64> = (0..cfg.n_tx).map(|_| cn(rng, 1.0)).collect();
                    for (sym, subs) in occ.iter().enumerate() {
                        if sym > 0 {
                            for hj in h.iter_mut() {
                                *hj = *hj * rho + cn(rng, 1.0) * innov;
                            }
                        }
                        for &sub in subs {
                            let idx = sym * s + sub;
                            let mut faded = Complex64::new(0.0, 0.0);
                            for hj in &h {
                                faded += hj * (g.amp[idx] * tx_scale);
                            }
                            y[idx] += faded;
                        }
                    }
                }
            }
        }
        for cell in y.iter_mut() {
            *cell += cn(rng, cfg.noise_var);
        }
        antennas.push(y);
    }
    Ok(ReceivedGrid { s, n, antennas })
}

/// Single-sender channel; see [`apply_channel_multi`].
pub fn apply_channel<R: Rng>(grid: &ToneGrid, cfg: &ChannelConfig, rng: &mut R) -> ReceivedGrid {
    apply_channel_multi(&[grid], cfg, rng).expect("single grid cannot mismatch")
}

/// Per-cell combined energy z = sum over antennas of |y_i|^2.
#[derive(Debug, Clone)]
pub struct EnergyGrid {
    s: usize,
    n: usize,
    z: Vec<f64>,
}

impl EnergyGrid {
    pub fn subcarriers(&self) -> usize {
        self.s
    }

    pub fn symbols(&self) -> usize {
        self.n
    }

    pub fn at(&self, sub: usize, sym: usize) -> f64 {
        self.z[sym * self.s + sub]
    }

    pub fn max(&self) -> f64 {
        self.z.iter().copied().fold(0.0, f64::max)
    }
}

pub fn combine_energy(recv: &ReceivedGrid) -> EnergyGrid {
    let mut z = vec![0.0; recv.s * recv.n];
    for antenna in &recv.antennas {
        for (acc, y) in z.iter_mut().zip(antenna) {
            *acc += y.norm_sqr();
        }
    }
    EnergyGrid {
        s: recv.s,
        n: recv.n,
        z,
    }
}

/// Per OFDM symbol, the subcarrier indices whose combined energy reached
/// the threshold. The receiver keeps no record of which user a tone came
/// from; separation is entirely the decoder's job.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetectionGrid {
    s: usize,
    sets: Vec<Vec<u32>>,
}

impl DetectionGrid {
    /// Builds a grid from explicit per-symbol index sets (deduplicated,
    /// stored ascending).
    pub fn new(s: usize, sets: Vec<Vec<u32>>) -> DetectionGrid {
        let sets = sets
            .into_iter()
            .map(|mut set| {
                set.sort_unstable();
                set.dedup();
                assert!(
                    set.last().is_none_or(|&i| (i as usize) < s),
                    "detection index outside grid"
                );
                set
            })
            .collect();
        DetectionGrid { s, sets }
    }

    /// The detection pattern of ideal, error-free tone detection: each
    /// symbol's set is exactly the union of the codewords' tones.
    pub fn perfect(codewords: &[&StsCodeword], s: usize) -> DetectionGrid {
        let n = codewords
            .first()
            .map(|c| c.symbols().len())
            .unwrap_or_default();
        let sets = (0..n)
            .map(|sym| {
                codewords
                    .iter()
                    .map(|c| c.symbols()[sym].value() as u32)
                    .collect()
            })
            .collect();
        DetectionGrid::new(s, sets)
    }

    pub fn subcarriers(&self) -> usize {
        self.s
    }

    pub fn symbols(&self) -> usize {
        self.sets.len()
    }

    pub fn set(&self, sym: usize) -> &[u32] {
        &self.sets[sym]
    }

    pub fn contains(&self, sym: usize, index: u32) -> bool {
        self.sets[sym].binary_search(&index).is_ok()
    }
}

/// Thresholds the energy grid: z >= x is a detection.
pub fn detect(z: &EnergyGrid, x: f64) -> DetectionGrid {
    assert!(x >= 0.0, "threshold must be nonnegative");
    let sets = (0..z.n)
        .map(|sym| {
            (0..z.s)
                .filter(|&sub| z.at(sub, sym) >= x)
                .map(|sub| sub as u32)
                .collect()
        })
        .collect();
    DetectionGrid { s: z.s, sets }
}

/// Erlang(shape, scale) survival function sum_{k<shape} (x/scale)^k/k! e^(-x/scale).
fn erlang_survival(x: f64, scale: f64, shape: usize) -> f64 {
    let r = x / scale;
    let mut term = 1.0;
    let mut acc = 1.0;
    for k in 1..shape {
        term *= r / k as f64;
        acc += term;
    }
    acc * (-r).exp()
}

/// Probability that combined noise-only energy crosses the threshold:
/// the false-alarm rate of the detector.
pub fn p_false_alarm(x: f64, sigma2: f64, n_rx: usize) -> f64 {
    assert!(x >= 0.0 && sigma2 > 0.0 && n_rx >= 1);
    erlang_survival(x, sigma2, n_rx)
}

/// Probability that an occupied Rayleigh-faded tone stays below the
/// threshold. With `n_user` co-located senders of per-user tone power
/// `p_total` the energies pool, so the miss rate improves as users stack.
pub fn p_erasure(x: f64, sigma2: f64, p_total: f64, n_rx: usize, n_user: usize) -> f64 {
    assert!(x >= 0.0 && sigma2 > 0.0 && p_total >= 0.0 && n_rx >= 1 && n_user >= 1);
    1.0 - erlang_survival(x, sigma2 + n_user as f64 * p_total, n_rx)
}

/// Numerically inverts the false-alarm curve: the threshold x whose
/// false-alarm probability equals `target_far`, by bisection on the
/// strictly decreasing survival function.
pub fn threshold_for_far(target_far: f64, sigma2: f64, n_rx: usize) -> f64 {
    assert!(
        target_far > 0.0 && target_far < 1.0,
        "target false-alarm rate must lie in (0, 1)"
    );
    let mut lo = 0.0;
    let mut hi = sigma2;
    while p_false_alarm(hi, sigma2, n_rx) > target_far {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if p_false_alarm(mid, sigma2, n_rx) > target_far {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Peak-to-average power ratio in dB of the time-domain waveform,
/// maximized over the grid's energized OFDM symbols.
///
/// Each column is inverse-DFT'd to S time samples; a single tone yields a
/// constant-modulus exponential, hence exactly 0 dB.
pub fn papr(grid: &ToneGrid) -> Result<f64, PhyError> {
    let s = grid.s;
    let mut worst: Option<f64> = None;
    for sym in 0..grid.n {
        let occupied = grid.occupied(sym);
        if occupied.is_empty() {
            continue;
        }
        let mut peak = 0.0f64;
        let mut total = 0.0f64;
        for t in 0..s {
            let mut sample = Complex64::new(0.0, 0.0);
            for &f in &occupied {
                let phase = 2.0 * std::f64::consts::PI * (f * t) as f64 / s as f64;
                sample += grid.at(f, sym) * Complex64::new(phase.cos(), phase.sin());
            }
            let power = sample.norm_sqr() / (s * s) as f64;
            peak = peak.max(power);
            total += power;
        }
        let ratio = peak / (total / s as f64);
        worst = Some(worst.map_or(ratio, |w: f64| w.max(ratio)));
    }
    worst
        .map(|r| 10.0 * r.log10())
        .ok_or(PhyError::EmptyGrid)
}
