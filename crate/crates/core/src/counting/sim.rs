use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric, Poisson};
use rayon::prelude::*;

use crate::counting::{ChannelRates, DetectorKind, DetectorModel, PairStatistics};
use crate::error::{Error, Result};

/// Pulses per independent random substream. At 76 MHz a block lasts 55 ms, so
/// a 10 us dead time carried across a block edge biases counts by < 2e-4.
pub const BLOCK_PULSES: u64 = 1 << 22;

/// Outcome of one heralded pulse (a signal click). Pulses without a signal
/// click are not recorded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountRecord {
    pub pulse_index: u64,
    pub signal_detected: bool,
    /// False when the idler detector was still dead at the herald.
    pub gate_opened: bool,
    pub idler_detected: bool,
    /// First idler click, ns after the gate trigger.
    pub idler_time_offset_ns: Option<f64>,
}

/// Per-pulse probabilities of the detection chain, shared by the sampler and
/// the closed-form model.
#[derive(Debug, Clone)]
pub(crate) struct Chain {
    pub mu: f64,
    pub stats: PairStatistics,
    /// Signal / idler pair-photon detection probabilities (path times detector).
    pub eps_s: f64,
    pub eps_i: f64,
    /// Mean detected idler noise photons per pulse at unit gate multiplier.
    pub nu_i: f64,
    /// Signal click sources in one pulse period: pair, noise, dark.
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub p_s: f64,
    pub period: f64,
    pub dead_s: f64,
    pub dead_i: f64,
    pub delay: f64,
    pub gate: f64,
    pub dark_rate_i: f64,
    pub idler: DetectorModel,
}

impl Chain {
    pub fn new(
        rates: &ChannelRates,
        signal: &DetectorModel,
        idler: &DetectorModel,
    ) -> Result<Self> {
        rates.validate()?;
        signal.validate()?;
        idler.validate()?;
        if signal.kind != DetectorKind::FreeRunning {
            return Err(Error::invalid("signal_detector", "must be free-running"));
        }
        if idler.kind != DetectorKind::Gated {
            return Err(Error::invalid("idler_detector", "must be gated"));
        }
        let period = rates.period_ns();
        let mu = rates.mu_pair;
        let stats = rates.statistics;
        let eps_s = rates.eta_s * signal.efficiency;
        let eps_i = rates.eta_i * idler.efficiency;
        let nu_s = signal.efficiency * (rates.eta_s * rates.raman_s + rates.leakage_s);
        let nu_i = idler.efficiency * (rates.eta_i * rates.raman_i + rates.leakage_i);
        let a = 1.0 - stats.pgf(mu, 1.0 - eps_s);
        let b = -(-nu_s).exp_m1();
        let c = -(-signal.dark_rate_hz * period * 1e-9).exp_m1();
        let p_s = 1.0 - (1.0 - a) * (1.0 - b) * (1.0 - c);
        Ok(Self {
            mu,
            stats,
            eps_s,
            eps_i,
            nu_i,
            a,
            b,
            c,
            p_s,
            period,
            dead_s: signal.dead_time_ns,
            dead_i: idler.dead_time_ns,
            delay: idler.electronic_delay_ns,
            gate: idler.gate_width_ns,
            dark_rate_i: idler.gate_dark_rate_per_ns(),
            idler: idler.clone(),
        })
    }

    /// Pulses from a herald at `phase` to the first live pulse after it.
    pub fn dead_span(&self, phase: f64) -> u64 {
        (((phase + self.dead_s) / self.period).ceil() as u64).max(1)
    }

    /// Probability that none of `n` idler photons (plus noise) at gate offset
    /// `o` is detected.
    pub fn idler_miss(&self, n: u64, o: f64) -> f64 {
        let m = self.idler.multiplier(o);
        (1.0 - self.eps_i * m).powi(n.min(i32::MAX as u64) as i32) * (-self.nu_i * m).exp()
    }
}

struct Sampler {
    gap: Option<Geometric>,
    /// Thermal: detected-pair excess `D - 1` given `D >= 1`.
    detected_excess: Option<Geometric>,
    /// Thermal: undetected pairs per unit of `D + 1`.
    undetected: Option<Geometric>,
    /// Thermal: pairs of a pulse with no signal knowledge.
    free: Option<Geometric>,
    poisson_undetected: Option<Poisson<f64>>,
    poisson_free: Option<Poisson<f64>>,
}

fn geometric(success: f64) -> Option<Geometric> {
    (success < 1.0).then(|| Geometric::new(success).expect("probability in (0, 1)"))
}

fn poisson(mean: f64) -> Option<Poisson<f64>> {
    (mean > 0.0).then(|| Poisson::new(mean).expect("positive mean"))
}

impl Sampler {
    fn new(ch: &Chain) -> Self {
        let (mu, e) = (ch.mu, ch.eps_s);
        let x = (1.0 - e) * mu / (1.0 + mu);
        Self {
            gap: (ch.p_s > 0.0).then(|| Geometric::new(ch.p_s).expect("probability in (0, 1]")),
            detected_excess: geometric(1.0 / (1.0 + e * mu)),
            undetected: geometric(1.0 - x),
            free: geometric(1.0 / (1.0 + mu)),
            poisson_undetected: poisson((1.0 - e) * mu),
            poisson_free: poisson(mu),
        }
    }

    fn geo(d: &Option<Geometric>, rng: &mut ChaCha8Rng) -> u64 {
        d.as_ref().map_or(0, |g| g.sample(rng))
    }

    fn poi(d: &Option<Poisson<f64>>, rng: &mut ChaCha8Rng) -> u64 {
        d.as_ref().map_or(0, |p| p.sample(rng) as u64)
    }

    /// Pairs in a live pulse whose signal channel did not click.
    fn unclicked(&self, ch: &Chain, rng: &mut ChaCha8Rng) -> u64 {
        match ch.stats {
            PairStatistics::Thermal => Self::geo(&self.undetected, rng),
            PairStatistics::Poisson => Self::poi(&self.poisson_undetected, rng),
        }
    }

    /// Pairs in a pulse the signal detector was blind to.
    fn unconditional(&self, ch: &Chain, rng: &mut ChaCha8Rng) -> u64 {
        match ch.stats {
            PairStatistics::Thermal => Self::geo(&self.free, rng),
            PairStatistics::Poisson => Self::poi(&self.poisson_free, rng),
        }
    }

    /// Pairs and phase (ns) of a pulse conditioned on a signal click.
    fn herald(&self, ch: &Chain, rng: &mut ChaCha8Rng) -> (f64, u64) {
        let u: f64 = rng.random();
        if u * ch.p_s < ch.a {
            let pairs = match ch.stats {
                PairStatistics::Thermal => {
                    let d = 1 + Self::geo(&self.detected_excess, rng);
                    let m: u64 = (0..=d).map(|_| Self::geo(&self.undetected, rng)).sum();
                    d + m
                }
                PairStatistics::Poisson => {
                    zero_truncated_poisson(ch.eps_s * ch.mu, rng)
                        + Self::poi(&self.poisson_undetected, rng)
                }
            };
            return (0.0, pairs);
        }
        let pairs = self.unclicked(ch, rng);
        let v: f64 = rng.random();
        let noise_or_dark = 1.0 - (1.0 - ch.b) * (1.0 - ch.c);
        if v * noise_or_dark < ch.b {
            (0.0, pairs)
        } else {
            (rng.random::<f64>() * ch.period, pairs)
        }
    }
}

fn zero_truncated_poisson(lambda: f64, rng: &mut ChaCha8Rng) -> u64 {
    let target = rng.random::<f64>() * -(-lambda).exp_m1();
    let mut k = 1u64;
    let mut p = lambda * (-lambda).exp();
    let mut cum = p;
    while cum < target && k < 1000 {
        k += 1;
        p *= lambda / k as f64;
        cum += p;
    }
    k
}

struct Herald {
    index: u64,
    phase: f64,
    pairs: u64,
    next_live: u64,
}

fn run_block(
    ch: &Chain,
    block: u64,
    start: u64,
    end: u64,
    seed: u64,
    out: &mut impl FnMut(CountRecord),
) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    let s = Sampler::new(ch);
    let Some(gap) = s.gap.as_ref() else { return };

    let mut heralds = Vec::new();
    let mut live = start;
    while live < end {
        let j = live.saturating_add(gap.sample(&mut rng));
        if j >= end {
            break;
        }
        let (phase, pairs) = s.herald(ch, &mut rng);
        let next_live = j + ch.dead_span(phase);
        heralds.push(Herald {
            index: j,
            phase,
            pairs,
            next_live,
        });
        live = next_live;
    }

    let t = ch.period;
    let mut idler_free_at = f64::NEG_INFINITY;
    for (h_i, h) in heralds.iter().enumerate() {
        let t_h = (h.index - start) as f64 * t + h.phase;
        if t_h < idler_free_at {
            out(CountRecord {
                pulse_index: h.index,
                signal_detected: true,
                gate_opened: false,
                idler_detected: false,
                idler_time_offset_ns: None,
            });
            continue;
        }
        let prev = h_i.checked_sub(1).map(|p| &heralds[p]);
        let next = heralds.get(h_i + 1);
        let live_from = prev.map_or(start, |p| p.next_live);

        let mut first = None;
        if ch.dark_rate_i > 0.0 {
            let td = -(1.0 - rng.random::<f64>()).ln() / ch.dark_rate_i;
            if td < ch.gate {
                first = Some(td);
            }
        }
        for dk in -2i64..=4 {
            let o = ch.delay + dk as f64 * t - h.phase;
            if o < 0.0 || o >= ch.gate {
                continue;
            }
            if first.is_some_and(|f| o >= f) {
                break;
            }
            let pairs = if dk == 0 {
                h.pairs
            } else {
                match h.index.checked_add_signed(dk) {
                    Some(k) if k >= start && k < end => {
                        if prev.is_some_and(|p| p.index == k) {
                            prev.unwrap().pairs
                        } else if next.is_some_and(|n| n.index == k) {
                            next.unwrap().pairs
                        } else if (dk < 0 && k >= live_from) || (dk > 0 && k >= h.next_live) {
                            s.unclicked(ch, &mut rng)
                        } else {
                            s.unconditional(ch, &mut rng)
                        }
                    }
                    _ => s.unconditional(ch, &mut rng),
                }
            };
            if rng.random::<f64>() >= ch.idler_miss(pairs, o) {
                first = Some(o);
                break;
            }
        }
        if let Some(f) = first {
            if ch.dead_i > 0.0 {
                idler_free_at = t_h + f + ch.dead_i;
            }
        }
        out(CountRecord {
            pulse_index: h.index,
            signal_detected: true,
            gate_opened: true,
            idler_detected: first.is_some(),
            idler_time_offset_ns: first,
        });
    }
}

fn prepare(
    rates: &ChannelRates,
    detectors: (&DetectorModel, &DetectorModel),
    n_pulses: u64,
) -> Result<Chain> {
    if n_pulses == 0 {
        return Err(Error::invalid("n_pulses", "must be > 0"));
    }
    rates.check_validity()?;
    Chain::new(rates, detectors.0, detectors.1)
}

fn block_bounds(block: u64, n_pulses: u64) -> (u64, u64) {
    let start = block * BLOCK_PULSES;
    (start, (start + BLOCK_PULSES).min(n_pulses))
}

/// Heralded-pulse records for `n_pulses` pulses, deterministic in `seed`.
pub fn simulate_pulses(
    rates: &ChannelRates,
    detectors: (&DetectorModel, &DetectorModel),
    n_pulses: u64,
    seed: u64,
) -> Result<Vec<CountRecord>> {
    let ch = prepare(rates, detectors, n_pulses)?;
    let blocks = n_pulses.div_ceil(BLOCK_PULSES);
    let parts: Vec<Vec<CountRecord>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let (start, end) = block_bounds(b, n_pulses);
            let mut v = Vec::new();
            run_block(&ch, b, start, end, seed, &mut |r| v.push(r));
            v
        })
        .collect();
    Ok(parts.concat())
}

/// Integer count summary of a run; the idler offsets are binned at 1 ps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountSummary {
    pub n_pulses: u64,
    pub heralds: u64,
    pub gates_opened: u64,
    pub idler_clicks: u64,
    offsets_ps: Vec<u64>,
}

impl CountSummary {
    pub fn new(n_pulses: u64, gate_width_ns: f64) -> Self {
        Self {
            n_pulses,
            heralds: 0,
            gates_opened: 0,
            idler_clicks: 0,
            offsets_ps: vec![0; (gate_width_ns * 1000.0).ceil() as usize],
        }
    }

    pub fn add(&mut self, r: &CountRecord) {
        self.heralds += r.signal_detected as u64;
        self.gates_opened += r.gate_opened as u64;
        if let Some(o) = r.idler_time_offset_ns {
            self.idler_clicks += 1;
            let k = ((o * 1000.0).floor() as usize).min(self.offsets_ps.len().saturating_sub(1));
            self.offsets_ps[k] += 1;
        }
    }

    pub fn merge(mut self, other: Self) -> Self {
        self.heralds += other.heralds;
        self.gates_opened += other.gates_opened;
        self.idler_clicks += other.idler_clicks;
        for (a, b) in self.offsets_ps.iter_mut().zip(other.offsets_ps) {
            *a += b;
        }
        self
    }

    pub fn from_records(records: &[CountRecord], n_pulses: u64, gate_width_ns: f64) -> Self {
        let mut s = Self::new(n_pulses, gate_width_ns);
        records.iter().for_each(|r| s.add(r));
        s
    }

    /// Idler clicks whose 1 ps bin center lies in `[lo, hi]` ns.
    pub fn count_between(&self, lo_ns: f64, hi_ns: f64) -> u64 {
        self.offsets_ps
            .iter()
            .enumerate()
            .filter(|(k, _)| {
                let c = (*k as f64 + 0.5) * 1e-3;
                c >= lo_ns && c <= hi_ns
            })
            .map(|(_, &n)| n)
            .sum()
    }

    pub fn gate_width_ns(&self) -> f64 {
        self.offsets_ps.len() as f64 * 1e-3
    }

    /// (bin center ns, count) for every nonempty 1 ps bin.
    pub fn offsets(&self) -> impl Iterator<Item = (f64, u64)> + '_ {
        self.offsets_ps
            .iter()
            .enumerate()
            .filter(|(_, &n)| n > 0)
            .map(|(k, &n)| ((k as f64 + 0.5) * 1e-3, n))
    }
}

/// Streaming form of [`simulate_pulses`]: the same records, reduced to counts.
pub fn simulate_summary(
    rates: &ChannelRates,
    detectors: (&DetectorModel, &DetectorModel),
    n_pulses: u64,
    seed: u64,
) -> Result<CountSummary> {
    let ch = prepare(rates, detectors, n_pulses)?;
    let blocks = n_pulses.div_ceil(BLOCK_PULSES);
    let gate = ch.gate;
    Ok((0..blocks)
        .into_par_iter()
        .fold(
            || CountSummary::new(n_pulses, gate),
            |mut acc, b| {
                let (start, end) = block_bounds(b, n_pulses);
                run_block(&ch, b, start, end, seed, &mut |r| acc.add(&r));
                acc
            },
        )
        .reduce(|| CountSummary::new(n_pulses, gate), CountSummary::merge))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet() -> (DetectorModel, DetectorModel) {
        let mut s = DetectorModel::nfad();
        s.dark_rate_hz = 0.0;
        let mut i = DetectorModel::gated();
        i.dark_prob_per_gate = 0.0;
        (s, i)
    }

    #[test]
    fn empty_source_never_clicks() {
        let (s, i) = quiet();
        let r = simulate_pulses(&ChannelRates::default(), (&s, &i), 10_000_000, 1).unwrap();
        assert!(r.is_empty());
    }

    #[test]
    fn deterministic_in_seed() {
        let (s, i) = (DetectorModel::nfad(), DetectorModel::gated());
        let rates = ChannelRates {
            mu_pair: 0.05,
            raman_s: 0.01,
            raman_i: 0.01,
            ..Default::default()
        };
        let a = simulate_pulses(&rates, (&s, &i), 9_000_000, 7).unwrap();
        let b = simulate_pulses(&rates, (&s, &i), 9_000_000, 7).unwrap();
        let c = simulate_pulses(&rates, (&s, &i), 9_000_000, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        let sum = simulate_summary(&rates, (&s, &i), 9_000_000, 7).unwrap();
        assert_eq!(
            sum,
            CountSummary::from_records(&a, 9_000_000, i.gate_width_ns)
        );
    }

    #[test]
    fn validity_enforced() {
        let (s, i) = quiet();
        let rates = ChannelRates::default().with_mu(0.5);
        assert!(matches!(
            simulate_pulses(&rates, (&s, &i), 10, 1),
            Err(Error::ModelValidity(_))
        ));
        assert!(simulate_pulses(&ChannelRates::default(), (&s, &i), 0, 1).is_err());
    }

    #[test]
    fn dead_time_spacing() {
        let (s, i) = (DetectorModel::nfad(), DetectorModel::gated());
        let rates = ChannelRates {
            mu_pair: 0.2,
            eta_s: 1.0,
            ..Default::default()
        };
        let r = simulate_pulses(&rates, (&s, &i), 2_000_000, 3).unwrap();
        let min_gap = (s.dead_time_ns / rates.period_ns()).ceil() as u64;
        assert!(r
            .windows(2)
            .all(|w| w[1].pulse_index - w[0].pulse_index >= min_gap));
    }

    #[test]
    fn zero_truncated_poisson_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let lam = 0.3;
        let n = 200_000;
        let mean = (0..n)
            .map(|_| zero_truncated_poisson(lam, &mut rng) as f64)
            .sum::<f64>()
            / n as f64;
        let expect = lam / -(-lam as f64).exp_m1();
        assert!((mean - expect).abs() < 0.01, "{mean} vs {expect}");
    }
}
