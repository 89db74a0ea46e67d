//! Monte Carlo moments and arm probabilities, exact enumeration at tiny `n`,
//! and log-log exponent fits.

use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arms::{arm_event_with, restricted_crossings, ArmScratch, ArmSpec, ArmVariant, ThreeArmFrame};
use crate::config::{site_count, Configuration};
use crate::error::{invalid, Error, Result};
use crate::features::FeatureEngine;
use crate::geometry::{make_horseshoe, LatticeBox, Side, Vertex};

/// Trials per parallel work unit; fixed so results do not depend on scheduling.
const CHUNK: u64 = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub n: u32,
    pub quantity: String,
    pub tau: u32,
    pub trials: u64,
    pub mean: f64,
    pub stderr: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EstimateTable {
    pub rows: Vec<EstimateRow>,
}

pub const CSV_HEADER: &str = "n,quantity,tau,trials,mean,stderr,seed";

impl EstimateTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{},{},{},{}\n", r.n, r.quantity, r.tau, r.trials, r.mean, r.stderr, r.seed));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == CSV_HEADER => {}
            _ => return Err(Error::Format(format!("expected CSV header {CSV_HEADER:?}"))),
        }
        let mut rows = Vec::new();
        for (k, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 7 {
                return Err(Error::Format(format!("line {}: expected 7 fields", k + 2)));
            }
            let bad = |what: &str| Error::Format(format!("line {}: bad {what}", k + 2));
            rows.push(EstimateRow {
                n: f[0].parse().map_err(|_| bad("n"))?,
                quantity: f[1].to_string(),
                tau: f[2].parse().map_err(|_| bad("tau"))?,
                trials: f[3].parse().map_err(|_| bad("trials"))?,
                mean: f[4].parse().map_err(|_| bad("mean"))?,
                stderr: f[5].parse().map_err(|_| bad("stderr"))?,
                seed: f[6].parse().map_err(|_| bad("seed"))?,
            });
        }
        Ok(EstimateTable { rows })
    }

    pub fn select(&self, quantity: &str, tau: Option<u32>) -> Vec<&EstimateRow> {
        self.rows.iter().filter(|r| r.quantity == quantity && tau.is_none_or(|t| r.tau == t)).collect()
    }
}

/// Worker count from `PERCTRI_WORKERS`, else the number of CPUs.
pub fn worker_count() -> usize {
    std::env::var("PERCTRI_WORKERS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&w| w > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|p| p.get()).unwrap_or(1))
}

fn pool() -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count())
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot start worker pool: {e}")))
}

/// Exact sums `Σ x^τ` and `Σ x^(2τ)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
struct Sums {
    s1: u128,
    s2: u128,
    overflow: bool,
}

impl Sums {
    fn push(&mut self, x: u64, tau: u32) {
        let p = (x as u128).checked_pow(tau);
        let p2 = p.and_then(|p| p.checked_mul(p));
        match (p, p2) {
            (Some(p), Some(p2)) => match (self.s1.checked_add(p), self.s2.checked_add(p2)) {
                (Some(a), Some(b)) => {
                    self.s1 = a;
                    self.s2 = b;
                }
                _ => self.overflow = true,
            },
            _ => self.overflow = true,
        }
    }

    fn merge(self, o: Sums) -> Sums {
        match (self.s1.checked_add(o.s1), self.s2.checked_add(o.s2)) {
            (Some(s1), Some(s2)) => Sums { s1, s2, overflow: self.overflow || o.overflow },
            _ => Sums { overflow: true, ..self },
        }
    }

    /// Mean and standard error `sd / sqrt(trials)` with the unbiased sample variance.
    fn moments(&self, trials: u64) -> (f64, f64) {
        let t = trials as f64;
        let mean = self.s1 as f64 / t;
        let var = ((self.s2 as f64 - self.s1 as f64 * mean) / (t - 1.0)).max(0.0);
        (mean, (var / t).sqrt())
    }
}

fn merge_vec(a: Vec<Sums>, b: Vec<Sums>) -> Vec<Sums> {
    a.into_iter().zip(b).map(|(x, y)| x.merge(y)).collect()
}

fn check_trials(trials: u64) -> Result<()> {
    if trials < 2 {
        return invalid(format!("need at least 2 trials, got {trials}"));
    }
    Ok(())
}

pub const FEATURE_QUANTITIES: [&str; 3] = ["L", "F", "Q"];

/// Unconditional moments `E|L|^τ`, `E|F|^τ`, `E|Q|^τ` for each `n` and `τ`.
/// Trial `t` at radius `n` uses the configuration `sample(n, master_seed, t)`.
pub fn run_moments(n_list: &[u32], tau_list: &[u32], trials: u64, master_seed: u64) -> Result<EstimateTable> {
    check_trials(trials)?;
    if tau_list.is_empty() || tau_list.contains(&0) {
        return invalid("tau values must be at least 1");
    }
    let pool = pool()?;
    let mut table = EstimateTable::default();
    for &n in n_list {
        if n == 0 {
            return invalid("n must be at least 1");
        }
        let k = tau_list.len();
        let chunks = trials.div_ceil(CHUNK);
        let sums: Result<Vec<Sums>> = pool.install(|| {
            (0..chunks)
                .into_par_iter()
                .map_init(
                    || (FeatureEngine::new(n), Configuration::all_closed(n)),
                    |(eng, cfg), ch| -> Result<Vec<Sums>> {
                        let mut acc = vec![Sums::default(); 3 * k];
                        for t in ch * CHUNK..((ch + 1) * CHUNK).min(trials) {
                            cfg.resample(master_seed, t);
                            let c = eng.counts(cfg)?;
                            for (qi, x) in [c.l, c.f, c.q].into_iter().enumerate() {
                                for (ti, &tau) in tau_list.iter().enumerate() {
                                    acc[qi * k + ti].push(x, tau);
                                }
                            }
                        }
                        Ok(acc)
                    },
                )
                .try_reduce(|| vec![Sums::default(); 3 * k], |a, b| Ok(merge_vec(a, b)))
        });
        let sums = sums?;
        for (qi, q) in FEATURE_QUANTITIES.iter().enumerate() {
            for (ti, &tau) in tau_list.iter().enumerate() {
                let s = sums[qi * k + ti];
                if s.overflow {
                    return invalid(format!("exact accumulator overflow for {q}^{tau} at n={n}; lower tau or trials"));
                }
                let (mean, stderr) = s.moments(trials);
                table.rows.push(EstimateRow { n, quantity: q.to_string(), tau, trials, mean, stderr, seed: master_seed });
            }
        }
    }
    Ok(table)
}

/// An arm-event family evaluated along a ladder of radii.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ArmTemplate {
    /// `U_κ(0, m; n)` with `n` from the ladder.
    Annulus { kappa: u8, pattern: Vec<crate::percolation::State>, inner: u32 },
    /// The half-plane event on `B(r)` itself, `r` from the ladder.
    HalfPlane,
    /// Horseshoe `H(ρ, ν)` in `B(2^ν)` with the inner box at the right side; ladder entries are `2^ν`.
    Horseshoe { rho: u32 },
    /// `T_κ(0, n)` with `n` from the ladder.
    Restricted { kappa: u8 },
}

impl ArmTemplate {
    pub fn quantity(&self) -> String {
        match self {
            ArmTemplate::Annulus { kappa, pattern, inner } => {
                let p: String = pattern.iter().map(|s| if *s == crate::percolation::State::Open { 'o' } else { 'c' }).collect();
                format!("U{kappa}:{p}:m={inner}")
            }
            ArmTemplate::HalfPlane => "E:halfplane".into(),
            ArmTemplate::Horseshoe { rho } => format!("J:rho={rho}"),
            ArmTemplate::Restricted { kappa } => format!("T{kappa}"),
        }
    }

    fn check(&self, r: u32) -> Result<()> {
        match self {
            ArmTemplate::Annulus { kappa, pattern, inner } => {
                ArmSpec { kappa: *kappa, pattern: pattern.clone(), center: Vertex::ORIGIN, inner: *inner, outer: r, variant: ArmVariant::Annulus }
                    .validate(r)
            }
            ArmTemplate::HalfPlane => {
                if r == 0 {
                    return invalid("half-plane radius must be positive");
                }
                Ok(())
            }
            ArmTemplate::Horseshoe { rho } => {
                if !r.is_power_of_two() || r.trailing_zeros() <= *rho {
                    return invalid(format!("horseshoe ladder entries must be powers of two above 2^{rho}, got {r}"));
                }
                Ok(())
            }
            ArmTemplate::Restricted { kappa } => ArmSpec::restricted(*kappa, Vertex::ORIGIN, r).validate(r),
        }
    }
}

enum Detector {
    Spec(ArmSpec),
    Frame(ThreeArmFrame),
}

fn detector(template: &ArmTemplate, r: u32) -> Result<Detector> {
    Ok(match template {
        ArmTemplate::Annulus { kappa, pattern, inner } => Detector::Spec(ArmSpec {
            kappa: *kappa,
            pattern: pattern.clone(),
            center: Vertex::ORIGIN,
            inner: *inner,
            outer: r,
            variant: ArmVariant::Annulus,
        }),
        ArmTemplate::HalfPlane => Detector::Frame(ThreeArmFrame::half_plane(r, LatticeBox::centered(r))?),
        ArmTemplate::Horseshoe { rho } => {
            let nu = r.trailing_zeros();
            let h = make_horseshoe(r, Vertex::new(r as i32 - (1 << rho), 0), *rho, nu, Side::Right)?;
            Detector::Frame(ThreeArmFrame::horseshoe(r, &h))
        }
        ArmTemplate::Restricted { kappa } => Detector::Spec(ArmSpec::restricted(*kappa, Vertex::ORIGIN, r)),
    })
}

/// Counts of successes of `hit` over trials `0..trials` at radius `n`.
fn count_hits(
    pool: &rayon::ThreadPool,
    n: u32,
    trials: u64,
    master_seed: u64,
    hit: impl Fn(&Configuration, &mut ArmScratch) -> Result<bool> + Sync,
) -> Result<u64> {
    pool.install(|| {
        (0..trials.div_ceil(CHUNK))
            .into_par_iter()
            .map_init(
                || (ArmScratch::new(), Configuration::all_closed(n)),
                |(s, cfg), ch| -> Result<u64> {
                    let mut hits = 0;
                    for t in ch * CHUNK..((ch + 1) * CHUNK).min(trials) {
                        cfg.resample(master_seed, t);
                        hits += hit(cfg, s)? as u64;
                    }
                    Ok(hits)
                },
            )
            .try_reduce(|| 0, |a, b| Ok(a + b))
    })
}

fn bernoulli_row(n: u32, quantity: String, hits: u64, trials: u64, seed: u64) -> EstimateRow {
    let s = Sums { s1: hits as u128, s2: hits as u128, overflow: false };
    let (mean, stderr) = s.moments(trials);
    EstimateRow { n, quantity, tau: 1, trials, mean, stderr, seed }
}

/// Estimated probability of the templated event at each ladder radius.
pub fn run_arms(template: &ArmTemplate, ladder: &[u32], trials: u64, master_seed: u64) -> Result<EstimateTable> {
    check_trials(trials)?;
    if ladder.len() < 3 {
        return invalid(format!("arm ladders need at least 3 radii, got {}", ladder.len()));
    }
    for &r in ladder {
        template.check(r)?;
    }
    let pool = pool()?;
    let mut table = EstimateTable::default();
    for &r in ladder {
        let det = detector(template, r)?;
        let hits = count_hits(&pool, r, trials, master_seed, |cfg, s| match &det {
            Detector::Spec(spec) => arm_event_with(cfg, spec, s),
            Detector::Frame(f) => Ok(f.detect(cfg, s)),
        })?;
        table.rows.push(bernoulli_row(r, template.quantity(), hits, trials, master_seed));
    }
    Ok(table)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    None,
    /// Weights `(mean/stderr)^2`, the inverse squared relative error.
    InverseRelativeVariance,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub residuals: Vec<f64>,
    pub r2: f64,
    /// `(log n, log mean)`.
    pub points: Vec<(f64, f64)>,
    pub weighting: Weighting,
}

/// Least-squares fit of `log mean` against `log n`. Rows with a nonpositive
/// mean are dropped with a warning.
pub fn fit_exponent(rows: &[EstimateRow], weighting: Weighting) -> Result<ExponentFit> {
    let mut pts = Vec::new();
    let mut w = Vec::new();
    for r in rows {
        if r.mean <= 0.0 || !r.mean.is_finite() {
            log::warn!("dropping n={} {} from the fit: mean {}", r.n, r.quantity, r.mean);
            continue;
        }
        pts.push(((r.n as f64).ln(), r.mean.ln()));
        w.push(match weighting {
            Weighting::InverseRelativeVariance if r.stderr > 0.0 => (r.mean / r.stderr).powi(2),
            _ => 1.0,
        });
    }
    if pts.len() < 3 {
        return invalid(format!("need at least 3 positive points to fit, got {}", pts.len()));
    }
    let sw: f64 = w.iter().sum();
    let mx = pts.iter().zip(&w).map(|(p, w)| w * p.0).sum::<f64>() / sw;
    let my = pts.iter().zip(&w).map(|(p, w)| w * p.1).sum::<f64>() / sw;
    let sxx: f64 = pts.iter().zip(&w).map(|(p, w)| w * (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().zip(&w).map(|(p, w)| w * (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return invalid("all fit points share one n");
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = pts.iter().map(|p| p.1 - (intercept + slope * p.0)).collect();
    let ss_res: f64 = residuals.iter().zip(&w).map(|(r, w)| w * r * r).sum();
    let ss_tot: f64 = pts.iter().zip(&w).map(|(p, w)| w * (p.1 - my).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    if !slope.is_finite() {
        return invalid("fit produced a non-finite slope");
    }
    Ok(ExponentFit { slope, intercept, residuals, r2, points: pts, weighting })
}

/// A gnuplot script plotting the fit points and line.
pub fn gnuplot_script(fit: &ExponentFit, title: &str) -> String {
    let mut s = String::new();
    s.push_str(&format!("set title \"{title} slope {:.4}\"\n", fit.slope));
    s.push_str("set xlabel \"log n\"\nset ylabel \"log mean\"\n");
    s.push_str(&format!("f(x) = {} + {} * x\n", fit.intercept, fit.slope));
    s.push_str("plot '-' using 1:2 with points title \"data\", f(x) title \"fit\"\n");
    for (x, y) in &fit.points {
        s.push_str(&format!("{x} {y}\n"));
    }
    s.push_str("e\n");
    s
}

/// Fitted slope of `log E|L_n|^2` and the table it came from.
pub fn second_moment_ratio(n_list: &[u32], trials: u64, master_seed: u64) -> Result<(ExponentFit, EstimateTable)> {
    let table = run_moments(n_list, &[1, 2], trials, master_seed)?;
    let rows: Vec<EstimateRow> = table.select("L", Some(2)).into_iter().cloned().collect();
    Ok((fit_exponent(&rows, Weighting::None)?, table))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactMoment {
    pub quantity: String,
    pub tau: u32,
    /// Reduced fraction `p/q`.
    pub value: String,
    pub numerator: String,
    pub denominator: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactResult {
    pub n: u32,
    pub configurations: u64,
    pub moments: Vec<ExactMoment>,
    pub arms: Vec<ExactMoment>,
}

impl ExactResult {
    pub fn get(&self, quantity: &str, tau: u32) -> Option<Ratio<u128>> {
        self.moments.iter().chain(&self.arms).find(|m| m.quantity == quantity && m.tau == tau).map(|m| {
            Ratio::new(m.numerator.parse().unwrap(), m.denominator.parse().unwrap())
        })
    }
}

fn exact_moment(quantity: &str, tau: u32, sum: u128, total: u128) -> ExactMoment {
    let r = Ratio::new(sum, total);
    ExactMoment {
        quantity: quantity.to_string(),
        tau,
        value: format!("{}/{}", r.numer(), r.denom()),
        numerator: r.numer().to_string(),
        denominator: r.denom().to_string(),
    }
}

/// Arm events evaluated by the oracle: `U_2`, `U_3`, `U_4` at `m = 0`.
pub fn oracle_arm_specs(n: u32) -> Vec<(String, ArmSpec)> {
    [2u8, 3, 4]
        .into_iter()
        .map(|k| {
            let t = ArmTemplate::Annulus { kappa: k, pattern: crate::arms::default_pattern(k), inner: 0 };
            (t.quantity(), ArmSpec::annulus(k, Vertex::ORIGIN, 0, n))
        })
        .collect()
}

/// Exact expectations over all `2^((2n+1)^2)` configurations, `n ∈ {1, 2}`.
pub fn exact_enumeration(n: u32, tau_max: u32) -> Result<ExactResult> {
    if !(1..=2).contains(&n) {
        return invalid(format!("exact enumeration needs n in {{1, 2}}, got {n}"));
    }
    if !(1..=3).contains(&tau_max) {
        return invalid(format!("exact enumeration needs tau in 1..=3, got {tau_max}"));
    }
    let sites = site_count(n);
    let total = 1u64 << sites;
    let arms = oracle_arm_specs(n);
    let na = arms.len();
    let tk = tau_max as usize;
    let pool = pool()?;
    let chunk = total.min(1 << 12);
    let sums: Result<Vec<u128>> = pool.install(|| {
        (0..total / chunk)
            .into_par_iter()
            .map_init(
                || (FeatureEngine::new(n), ArmScratch::new(), Configuration::all_closed(n)),
                |(eng, s, cfg), ch| -> Result<Vec<u128>> {
                    let mut acc = vec![0u128; 3 * tk + na];
                    for bits in ch * chunk..(ch + 1) * chunk {
                        cfg.set_index_bits(bits);
                        let c = eng.counts(cfg)?;
                        for (qi, x) in [c.l, c.f, c.q].into_iter().enumerate() {
                            let mut p = 1u128;
                            for t in 0..tk {
                                p *= x as u128;
                                acc[qi * tk + t] += p;
                            }
                        }
                        for (a, (_, spec)) in arms.iter().enumerate() {
                            acc[3 * tk + a] += arm_event_with(cfg, spec, s)? as u128;
                        }
                    }
                    Ok(acc)
                },
            )
            .try_reduce(|| vec![0u128; 3 * tk + na], |a, b| Ok(a.iter().zip(&b).map(|(x, y)| x + y).collect()))
    });
    let sums = sums?;
    let mut moments = Vec::new();
    for (qi, q) in FEATURE_QUANTITIES.iter().enumerate() {
        for t in 0..tk {
            moments.push(exact_moment(q, t as u32 + 1, sums[qi * tk + t], total as u128));
        }
    }
    let arms = arms
        .iter()
        .enumerate()
        .map(|(a, (name, _))| exact_moment(name, 1, sums[3 * tk + a], total as u128))
        .collect();
    Ok(ExactResult { n, configurations: total, moments, arms })
}

/// Monte Carlo estimates of the oracle arm events at small `n`.
pub fn run_oracle_arms(n: u32, trials: u64, master_seed: u64) -> Result<EstimateTable> {
    check_trials(trials)?;
    let pool = pool()?;
    let mut table = EstimateTable::default();
    for (name, spec) in oracle_arm_specs(n) {
        let hits = count_hits(&pool, n, trials, master_seed, |cfg, s| arm_event_with(cfg, &spec, s))?;
        table.rows.push(bernoulli_row(n, name, hits, trials, master_seed));
    }
    Ok(table)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioCell {
    pub x: Vertex,
    pub u_hits: u64,
    pub t_hits: u64,
    pub ratio: Option<f64>,
    /// 95% interval from the delta method on the log ratio.
    pub ci: Option<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub kappa: u8,
    pub n: u32,
    /// Trials used for the annulus events.
    pub u_trials: u64,
    /// Trials used for the restricted events.
    pub t_trials: u64,
    pub seed: u64,
    pub cells: Vec<RatioCell>,
    /// Index into `cells` of the largest ratio.
    pub argmax: Option<usize>,
    /// Cells with no restricted-event hits.
    pub zero_denominator: Vec<Vertex>,
}

impl RatioReport {
    pub fn max_cell(&self) -> Option<&RatioCell> {
        self.argmax.map(|k| &self.cells[k])
    }
}

/// The 5×5 grid `{−n/4, −n/8, 0, n/8, n/4}²`.
pub fn ratio_grid(n: u32) -> Vec<Vertex> {
    let q = (n / 4) as i32;
    let e = (n / 8) as i32;
    let mut coords = vec![-q, -e, 0, e, q];
    coords.dedup();
    let mut out = Vec::new();
    for &y in &coords {
        for &x in &coords {
            out.push(Vertex::new(x, y));
        }
    }
    out
}

/// `P̂(U_κ(x, 0; n)) / P̂(T_κ(x, n))` over the grid of [`ratio_grid`].
pub fn restricted_ratio_report(kappa: u8, n: u32, u_trials: u64, t_trials: u64, master_seed: u64) -> Result<RatioReport> {
    check_trials(u_trials)?;
    check_trials(t_trials)?;
    if !(2..=4).contains(&kappa) {
        return invalid(format!("kappa must be 2, 3 or 4, got {kappa}"));
    }
    let grid = ratio_grid(n);
    let specs: Vec<(ArmSpec, ArmSpec)> = grid
        .iter()
        .map(|&x| {
            let mut u = ArmSpec::annulus(kappa, x, 0, n);
            let t = ArmSpec::restricted(kappa, x, n);
            u.pattern = t.pattern.clone();
            (u, t)
        })
        .collect();
    for (u, t) in &specs {
        u.validate(n)?;
        t.validate(n)?;
    }
    let g = grid.len();
    let pool = pool()?;
    let tally = |trials: u64, cell: &(dyn Fn(&Configuration, &mut ArmScratch, &mut [u64], u64) -> Result<()> + Sync)| {
        pool.install(|| {
            (0..trials.div_ceil(CHUNK))
                .into_par_iter()
                .map_init(
                    || (ArmScratch::new(), Configuration::all_closed(n)),
                    |(s, cfg), ch| -> Result<Vec<u64>> {
                        let mut acc = vec![0u64; g];
                        for t in ch * CHUNK..((ch + 1) * CHUNK).min(trials) {
                            cfg.resample(master_seed, t);
                            cell(cfg, s, &mut acc, t)?;
                        }
                        Ok(acc)
                    },
                )
                .try_reduce(|| vec![0u64; g], |a, b| Ok(a.iter().zip(&b).map(|(x, y)| x + y).collect()))
        })
    };
    let u_counts = tally(u_trials, &|cfg, s, acc, _| {
        for (k, (u, _)) in specs.iter().enumerate() {
            acc[k] += arm_event_with(cfg, u, s)? as u64;
        }
        Ok(())
    })?;
    // The rectangle crossings do not depend on the centre and fail on most
    // configurations, so they gate the per-cell arm searches.
    let t_counts = tally(t_trials, &|cfg, s, acc, t| {
        if !restricted_crossings(cfg, kappa, s)? {
            return Ok(());
        }
        for (k, (u, r)) in specs.iter().enumerate() {
            if arm_event_with(cfg, r, s)? {
                if !arm_event_with(cfg, u, s)? {
                    return Err(Error::Invariant(format!(
                        "restricted event without the annulus event at {} (trial {t})",
                        r.center
                    )));
                }
                acc[k] += 1;
            }
        }
        Ok(())
    })?;
    let mut cells = Vec::new();
    let mut zero = Vec::new();
    for (k, &x) in grid.iter().enumerate() {
        let (u, t) = (u_counts[k], t_counts[k]);
        let (ratio, ci) = if t == 0 || u == 0 {
            if t == 0 {
                zero.push(x);
            }
            (if t == 0 { None } else { Some(0.0) }, None)
        } else {
            let (pu, pt) = (u as f64 / u_trials as f64, t as f64 / t_trials as f64);
            let r = pu / pt;
            let se = ((1.0 - pu) / u as f64 + (1.0 - pt) / t as f64).sqrt();
            (Some(r), Some((r * (-1.96 * se).exp(), r * (1.96 * se).exp())))
        };
        cells.push(RatioCell { x, u_hits: u, t_hits: t, ratio, ci });
    }
    let argmax = cells
        .iter()
        .enumerate()
        .filter_map(|(k, c)| c.ratio.map(|r| (k, r)))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(k, _)| k);
    Ok(RatioReport { kappa, n, u_trials, t_trials, seed: master_seed, cells, argmax, zero_denominator: zero })
}
