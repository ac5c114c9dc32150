//! Exact mass and sampling of typicality events for i.i.d. codewords.
//!
//! A codeword `u^n ~ p_U^n` is scored against a fixed labelled sequence
//! `s^n`. Whether `(s^n, u^n)` is typical depends only on the counts
//! `N(s, u)`, so the event is a union of composition classes: for each label
//! `s` a composition of its `n_s` slots over the codeword alphabet. The mass of
//! one class is `Π_s multinomial(n_s; N(s,·)) Π_u p_U(u)^{N(·,u)}`; the union is
//! enumerated depth-first with total-variation pruning and summed in log space.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::classical::{strictly_within, tv_counts};
use crate::error::{Error, Result};

const WORK_CAP: u64 = 50_000_000;

/// `ln k!` for `k ≤ n`.
pub(crate) fn ln_factorials(n: usize) -> Vec<f64> {
    let mut v = Vec::with_capacity(n + 1);
    v.push(0.0);
    for k in 1..=n {
        v.push(v[k - 1] + (k as f64).ln());
    }
    v
}

/// One typicality test on the counts `N(s, u)`. With `map`, labels are first
/// merged to `map[s]` before comparing to `target` (row-major over
/// merged label × codeword symbol).
#[derive(Debug, Clone)]
pub(crate) struct Constraint<'a> {
    pub map: Option<Vec<usize>>,
    pub groups: usize,
    pub target: &'a [f64],
    pub radius: f64,
    pub inside: bool,
}

impl Constraint<'_> {
    fn holds(&self, counts: &[u64], nu: usize, n: usize) -> bool {
        let tv = match &self.map {
            None => tv_counts(counts, n, self.target),
            Some(map) => {
                let mut agg = vec![0u64; self.groups * nu];
                for (s, &g) in map.iter().enumerate() {
                    for u in 0..nu {
                        agg[g * nu + u] += counts[s * nu + u];
                    }
                }
                tv_counts(&agg, n, self.target)
            }
        };
        strictly_within(tv, self.radius) == self.inside
    }
}

/// Event over codewords relative to a labelled sequence.
pub(crate) struct Ball<'a> {
    n: usize,
    labels: &'a [usize],
    label_counts: Vec<u64>,
    nu: usize,
    ln_pu: Vec<f64>,
    lnfact: &'a [f64],
    constraints: Vec<Constraint<'a>>,
}

struct Walk<'w> {
    counts: Vec<u64>,
    work: u64,
    visit: &'w mut dyn FnMut(&[u64], f64) -> bool,
    stopped: bool,
}

impl<'a> Ball<'a> {
    pub fn new(
        labels: &'a [usize],
        num_labels: usize,
        p_u: &[f64],
        lnfact: &'a [f64],
        constraints: Vec<Constraint<'a>>,
    ) -> Self {
        let mut label_counts = vec![0u64; num_labels];
        for &s in labels {
            label_counts[s] += 1;
        }
        Self {
            n: labels.len(),
            labels,
            label_counts,
            nu: p_u.len(),
            ln_pu: p_u
                .iter()
                .map(|&p| if p > 0.0 { p.ln() } else { f64::NEG_INFINITY })
                .collect(),
            lnfact,
            constraints,
        }
    }

    /// Pruning bound available when the first constraint is an unmerged
    /// inside test: the summed absolute count deviation must stay below
    /// `2n·radius`.
    fn prune_target(&self) -> Option<(&[f64], f64)> {
        let c = self.constraints.first()?;
        (c.inside && c.map.is_none()).then_some((c.target, 2.0 * self.n as f64 * c.radius * (1.0 + 1e-9) + 1e-9))
    }

    fn visit(&self, f: &mut dyn FnMut(&[u64], f64) -> bool) -> Result<()> {
        let ns = self.label_counts.len();
        let mut walk = Walk {
            counts: vec![0; ns * self.nu],
            work: 0,
            visit: f,
            stopped: false,
        };
        // Lower bound on the deviation still to come from labels s.. .
        let mut tail = vec![0.0; ns + 1];
        if let Some((target, _)) = self.prune_target() {
            for s in (0..ns).rev() {
                let row: f64 = target[s * self.nu..(s + 1) * self.nu].iter().sum();
                tail[s] = tail[s + 1] + (self.label_counts[s] as f64 - self.n as f64 * row).abs();
            }
        }
        let base: f64 = self.label_counts.iter().map(|&c| self.lnfact[c as usize]).sum();
        self.descend(&mut walk, &tail, 0, 0, self.label_counts[0], 0.0, base)?;
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn descend(
        &self,
        walk: &mut Walk<'_>,
        tail: &[f64],
        s: usize,
        u: usize,
        rem: u64,
        dev: f64,
        lnw: f64,
    ) -> Result<()> {
        if walk.stopped {
            return Ok(());
        }
        walk.work += 1;
        if walk.work > WORK_CAP {
            return Err(Error::ResourceCap(format!(
                "typical-set enumeration exceeded {WORK_CAP} steps at n = {}",
                self.n
            )));
        }
        let ns = self.label_counts.len();
        let nu = self.nu;
        if s == ns {
            if self.constraints.iter().all(|c| c.holds(&walk.counts, nu, self.n)) {
                walk.stopped = (walk.visit)(&walk.counts, lnw);
            }
            return Ok(());
        }
        let idx = s * nu + u;
        let last = u + 1 == nu;
        let (lo, hi) = match self.prune_target() {
            Some((target, bound)) => {
                let a = self.n as f64 * target[idx];
                let budget = bound - dev - tail[s + 1];
                if budget <= 0.0 {
                    return Ok(());
                }
                if last {
                    (rem, rem)
                } else {
                    let lo = (a - budget).floor().max(0.0) as u64;
                    let hi = ((a + budget).ceil().max(0.0) as u64).min(rem);
                    if lo > hi {
                        return Ok(());
                    }
                    (lo, hi)
                }
            }
            None => {
                if last {
                    (rem, rem)
                } else {
                    (0, rem)
                }
            }
        };
        for v in lo..=hi {
            let mut ndev = dev;
            if let Some((target, bound)) = self.prune_target() {
                ndev += (v as f64 - self.n as f64 * target[idx]).abs();
                // Remaining cells of this label must absorb `rem - v`.
                let row_rest: f64 = target[idx + 1..(s + 1) * nu].iter().sum::<f64>() * self.n as f64;
                let within = if last { 0.0 } else { ((rem - v) as f64 - row_rest).abs() };
                if ndev + within + tail[s + 1] >= bound {
                    continue;
                }
            }
            let term = if v == 0 {
                0.0
            } else if self.ln_pu[u] == f64::NEG_INFINITY {
                continue;
            } else {
                v as f64 * self.ln_pu[u] - self.lnfact[v as usize]
            };
            walk.counts[idx] = v;
            if last {
                let next_rem = if s + 1 < ns { self.label_counts[s + 1] } else { 0 };
                self.descend(walk, tail, s + 1, 0, next_rem, ndev, lnw + term)?;
            } else {
                self.descend(walk, tail, s, u + 1, rem - v, ndev, lnw + term)?;
            }
            walk.counts[idx] = 0;
            if walk.stopped {
                break;
            }
        }
        Ok(())
    }

    /// `ln P(event)`; `-inf` when empty.
    pub fn ln_mass(&self) -> Result<f64> {
        let mut max = f64::NEG_INFINITY;
        let mut acc = 0.0;
        self.visit(&mut |_, lnw| {
            if lnw > max {
                acc = acc * (max - lnw).exp() + 1.0;
                max = lnw;
            } else {
                acc += (lnw - max).exp();
            }
            false
        })?;
        Ok(if acc > 0.0 { max + acc.ln() } else { f64::NEG_INFINITY })
    }

    /// Counts `N(s, u)` drawn from the event's conditional law.
    pub fn sample_counts<R: Rng>(&self, rng: &mut R, ln_mass: f64) -> Result<Vec<u64>> {
        if ln_mass == f64::NEG_INFINITY {
            return Err(Error::InvalidInput("sampling from an empty typicality event".into()));
        }
        let threshold: f64 = rng.gen();
        let mut acc = 0.0;
        let mut chosen: Option<Vec<u64>> = None;
        self.visit(&mut |counts, lnw| {
            acc += (lnw - ln_mass).exp();
            chosen = Some(counts.to_vec());
            acc >= threshold
        })?;
        Ok(chosen.expect("nonempty event visits at least one class"))
    }

    /// Codeword drawn from the event's conditional law: a composition class
    /// by mass, then a uniform arrangement within each label.
    pub fn sample<R: Rng>(&self, rng: &mut R, ln_mass: f64) -> Result<Vec<u8>> {
        let counts = self.sample_counts(rng, ln_mass)?;
        Ok(arrange(rng, self.labels, self.label_counts.len(), self.nu, &counts))
    }
}

/// Places `counts[s·nu + u]` copies of `u` uniformly at random over the slots
/// labelled `s`.
pub(crate) fn arrange<R: Rng>(rng: &mut R, labels: &[usize], ns: usize, nu: usize, counts: &[u64]) -> Vec<u8> {
    let mut out = vec![0u8; labels.len()];
    let mut slots: Vec<Vec<usize>> = vec![Vec::new(); ns];
    for (i, &s) in labels.iter().enumerate() {
        slots[s].push(i);
    }
    for (s, positions) in slots.iter().enumerate() {
        let mut symbols = Vec::with_capacity(positions.len());
        for u in 0..nu {
            symbols.extend(std::iter::repeat_n(u as u8, counts[s * nu + u] as usize));
        }
        symbols.shuffle(rng);
        for (&i, &u) in positions.iter().zip(&symbols) {
            out[i] = u;
        }
    }
    out
}

/// Counts `N(s, u)` of a labelled sequence against a codeword.
pub(crate) fn joint_counts(labels: &[usize], ns: usize, u: &[u8], nu: usize) -> Vec<u64> {
    let mut c = vec![0u64; ns * nu];
    for (&s, &x) in labels.iter().zip(u) {
        c[s * nu + x as usize] += 1;
    }
    c
}

/// i.i.d. draw from `p` by inverse CDF.
pub(crate) fn sample_iid<R: Rng>(rng: &mut R, p: &[f64], n: usize) -> Vec<u8> {
    (0..n).map(|_| draw(rng, p) as u8).collect()
}

pub(crate) fn draw<R: Rng>(rng: &mut R, p: &[f64]) -> usize {
    let t: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = 0;
    for (k, &pk) in p.iter().enumerate() {
        if pk > 0.0 {
            acc += pk;
            last = k;
            if t < acc {
                return k;
            }
        }
    }
    last
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn inside<'a>(target: &'a [f64], radius: f64) -> Vec<Constraint<'a>> {
        vec![Constraint {
            map: None,
            groups: 0,
            target,
            radius,
            inside: true,
        }]
    }

    /// Brute force over all `nu^n` codewords.
    fn brute(labels: &[usize], ns: usize, p_u: &[f64], cons: &[Constraint<'_>]) -> f64 {
        let n = labels.len();
        let nu = p_u.len();
        let mut total = 0.0;
        for code in 0..nu.pow(n as u32) {
            let mut c = code;
            let mut u = vec![0u8; n];
            let mut prob = 1.0;
            for slot in u.iter_mut() {
                *slot = (c % nu) as u8;
                prob *= p_u[c % nu];
                c /= nu;
            }
            let counts = joint_counts(labels, ns, &u, nu);
            if cons.iter().all(|k| k.holds(&counts, nu, n)) {
                total += prob;
            }
        }
        total
    }

    #[test]
    fn mass_matches_brute_force() {
        let lnf = ln_factorials(12);
        let labels = [0, 1, 1, 0, 2, 1, 0, 0, 2, 1];
        let p_u = [0.5, 0.3, 0.2];
        let target = [0.2, 0.1, 0.1, 0.1, 0.2, 0.1, 0.1, 0.05, 0.05];
        for radius in [0.1, 0.25, 0.4, 0.9] {
            let cons = inside(&target, radius);
            let exact = brute(&labels, 3, &p_u, &cons);
            let ball = Ball::new(&labels, 3, &p_u, &lnf, cons);
            let m = ball.ln_mass().unwrap().exp();
            assert!((m - exact).abs() < 1e-12, "r={radius}: {m} vs {exact}");
        }
    }

    #[test]
    fn outside_and_merged_constraints() {
        let lnf = ln_factorials(8);
        let labels = [0, 1, 2, 3, 0, 1, 2, 3];
        let p_u = [0.6, 0.4];
        let joint = [0.2, 0.05, 0.05, 0.2, 0.15, 0.1, 0.1, 0.15];
        let merged = [0.35, 0.15, 0.15, 0.35];
        let cons = vec![
            Constraint {
                map: Some(vec![0, 0, 1, 1]),
                groups: 2,
                target: &merged,
                radius: 0.3,
                inside: true,
            },
            Constraint {
                map: None,
                groups: 0,
                target: &joint,
                radius: 0.2,
                inside: false,
            },
        ];
        let exact = brute(&labels, 4, &p_u, &cons);
        let ball = Ball::new(&labels, 4, &p_u, &lnf, cons);
        assert!((ball.ln_mass().unwrap().exp() - exact).abs() < 1e-12);
    }

    #[test]
    fn samples_land_in_the_event_with_the_right_frequencies() {
        let lnf = ln_factorials(6);
        let labels = [0, 0, 1, 1, 1, 0];
        let p_u = [0.7, 0.3];
        let target = [0.25, 0.25, 0.4, 0.1];
        let cons = inside(&target, 0.3);
        let ball = Ball::new(&labels, 2, &p_u, &lnf, cons.clone());
        let lm = ball.ln_mass().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let trials = 20_000;
        let mut ones_at_0 = 0;
        for _ in 0..trials {
            let u = ball.sample(&mut rng, lm).unwrap();
            let c = joint_counts(&labels, 2, &u, 2);
            assert!(cons[0].holds(&c, 2, 6));
            ones_at_0 += u[0] as usize;
        }
        // Oracle: P(u_0 = 1 | event) by brute force.
        let mut num = 0.0;
        let mut den = 0.0;
        for code in 0..64u32 {
            let u: Vec<u8> = (0..6).map(|i| ((code >> i) & 1) as u8).collect();
            let prob: f64 = u.iter().map(|&b| p_u[b as usize]).product();
            if cons[0].holds(&joint_counts(&labels, 2, &u, 2), 2, 6) {
                den += prob;
                if u[0] == 1 {
                    num += prob;
                }
            }
        }
        let freq = ones_at_0 as f64 / trials as f64;
        assert!((freq - num / den).abs() < 0.015, "{freq} vs {}", num / den);
    }

    #[test]
    fn empty_event_has_zero_mass() {
        let lnf = ln_factorials(4);
        let labels = [0, 0, 0, 0];
        let ball = Ball::new(&labels, 1, &[1.0, 0.0], &lnf, inside(&[0.0, 1.0], 0.5));
        assert_eq!(ball.ln_mass().unwrap(), f64::NEG_INFINITY);
    }
}
