use crate::classical::pmf::{flat_index, table_size, total_variation_slices, Alphabet, JointPmf};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Joint empirical type of aligned sequences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeClass {
    alphabets: Vec<Alphabet>,
    n: usize,
    counts: Vec<u64>,
}

impl TypeClass {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn alphabets(&self) -> &[Alphabet] {
        &self.alphabets
    }

    pub fn frequencies<T: Real>(&self) -> JointPmf<T> {
        let n = T::from_usize(self.n).expect("sequence length fits the scalar type");
        let probs = self
            .counts
            .iter()
            .map(|&c| T::from_u64(c).expect("count fits the scalar type") / n)
            .collect();
        JointPmf::new(self.alphabets.clone(), probs).expect("a type is a valid pmf")
    }

    /// Total variation between this type and `target`.
    pub fn distance<T: Real>(&self, target: &JointPmf<T>) -> Result<T> {
        let freq: JointPmf<T> = self.frequencies();
        freq.total_variation(target)
    }
}

/// Counts symbol tuples across aligned sequences of symbol indices.
pub fn empirical_type(alphabets: &[Alphabet], seqs: &[&[usize]]) -> Result<TypeClass> {
    if alphabets.len() != seqs.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} alphabets for {} sequences",
            alphabets.len(),
            seqs.len()
        )));
    }
    let n = seqs.first().map_or(0, |s| s.len());
    if n == 0 {
        return Err(Error::InvalidInput("sequences must be nonempty".into()));
    }
    if seqs.iter().any(|s| s.len() != n) {
        return Err(Error::DimensionMismatch("sequences differ in length".into()));
    }
    let mut counts = vec![0u64; table_size(alphabets)?];
    let mut tuple = vec![0usize; seqs.len()];
    for i in 0..n {
        for (slot, s) in tuple.iter_mut().zip(seqs) {
            *slot = s[i];
        }
        counts[flat_index(alphabets, &tuple)?] += 1;
    }
    Ok(TypeClass {
        alphabets: alphabets.to_vec(),
        n,
        counts,
    })
}

/// Strict `tv < radius`, counting values within rounding of the radius as
/// on the boundary. Types that sit exactly on the radius, such as 2 of 5
/// against ½ at radius 0.1, otherwise land on either side depending on the
/// order of floating-point operations.
pub fn strictly_within<T: Real>(tv: T, radius: T) -> bool {
    tv < radius - T::epsilon() * T::lit(1024.0) * radius.max(T::one())
}

/// Strict δ-typicality: `TV(type, target) < radius`.
pub fn is_typical<T: Real>(seqs: &[&[usize]], target: &JointPmf<T>, radius: T) -> Result<bool> {
    let t = empirical_type(target.variables(), seqs)?;
    Ok(strictly_within(t.distance(target)?, radius))
}

/// Typicality test on a raw count table against a dense target table.
pub(crate) fn counts_within(counts: &[u64], n: usize, target: &[f64], radius: f64) -> bool {
    strictly_within(tv_counts(counts, n, target), radius)
}

pub(crate) fn tv_counts(counts: &[u64], n: usize, target: &[f64]) -> f64 {
    let inv = 1.0 / n as f64;
    let freq: Vec<f64> = counts.iter().map(|&c| c as f64 * inv).collect();
    total_variation_slices(&freq, target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bits(name: &str) -> Alphabet {
        Alphabet::indexed(name, 2).unwrap()
    }

    #[test]
    fn type_examples() {
        let t = empirical_type(&[bits("X")], &[&[0, 0, 1, 1]]).unwrap();
        assert_eq!(t.frequencies::<f64>().probs(), &[0.5, 0.5]);

        let t = empirical_type(&[bits("X"), bits("Y")], &[&[0, 1], &[0, 1]]).unwrap();
        assert_eq!(t.frequencies::<f64>().probs(), &[0.5, 0.0, 0.0, 0.5]);

        let t = empirical_type(&[bits("X")], &[&[0, 0, 0, 1, 0, 0, 1, 0]]).unwrap();
        assert_eq!(t.frequencies::<f64>().probs(), &[0.75, 0.25]);
        assert_eq!(t.counts().iter().sum::<u64>(), 8);
    }

    #[test]
    fn type_errors() {
        assert!(empirical_type(&[bits("X"), bits("Y")], &[&[0, 1], &[0]]).is_err());
        assert!(empirical_type(&[bits("X")], &[&[0, 2]]).is_err());
        assert!(empirical_type(&[bits("X")], &[&[]]).is_err());
    }

    #[test]
    fn typicality_examples() {
        let target = JointPmf::new(vec![bits("X")], vec![0.75, 0.25]).unwrap();
        assert!(is_typical(&[&[0, 0, 0, 1]], &target, 1e-12).unwrap());

        let uniform = JointPmf::<f64>::uniform(vec![bits("X")]).unwrap();
        assert!(!is_typical(&[&[0; 10]], &uniform, 0.1).unwrap());
    }

    /// `P(|K/100 − ½| < 0.2)` for `K ~ Bin(100, ½)`, summed exactly in log space.
    fn binomial_window_probability() -> f64 {
        let ln_choose = |k: usize| -> f64 {
            (1..=100).map(|i| (i as f64).ln()).sum::<f64>()
                - (1..=k).map(|i| (i as f64).ln()).sum::<f64>()
                - (1..=(100 - k)).map(|i| (i as f64).ln()).sum::<f64>()
        };
        (31..=69).map(|k| (ln_choose(k) - 100.0 * 2f64.ln()).exp()).sum()
    }

    #[test]
    fn uniform_sample_is_typical_with_high_probability() {
        let exact = binomial_window_probability();
        assert!(exact >= 0.99, "oracle probability {exact}");

        let uniform = JointPmf::<f64>::uniform(vec![bits("X")]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let trials = 2000;
        let hits = (0..trials)
            .filter(|_| {
                let x: Vec<usize> = (0..100).map(|_| rng.gen_range(0..2)).collect();
                is_typical(&[&x], &uniform, 0.2).unwrap()
            })
            .count();
        assert!(hits as f64 / trials as f64 >= 0.99);
    }

    #[test]
    fn counts_helper_matches_pmf_route() {
        let target = JointPmf::new(vec![bits("X"), bits("Y")], vec![0.4, 0.1, 0.2, 0.3]).unwrap();
        let t = empirical_type(target.variables(), &[&[0, 0, 1, 1, 0], &[0, 1, 0, 1, 0]]).unwrap();
        let a = t.distance(&target).unwrap();
        let b = tv_counts(t.counts(), t.n(), target.probs());
        assert!((a - b).abs() < 1e-15);
        assert!(counts_within(t.counts(), t.n(), target.probs(), a + 1e-9));
        assert!(!counts_within(t.counts(), t.n(), target.probs(), a));
    }

    #[test]
    fn boundary_types_are_not_typical() {
        // |2/5 - 1/2| = 1/10 exactly; both rounding routes must agree.
        let target = [0.5, 0.5];
        assert!(!counts_within(&[2, 3], 5, &target, 0.1));
        assert!(!counts_within(&[3, 2], 5, &target, 0.1));
        assert!(counts_within(&[2, 3], 5, &target, 0.1 + 1e-9));
        assert!(!strictly_within(0.6f64 - 0.5, 0.1));
        assert!(!strictly_within(3.0f64 * 0.2 - 0.5, 0.1));
    }

    proptest::proptest! {
        #[test]
        fn type_is_valid_pmf(x in proptest::collection::vec(0usize..3, 1..60)) {
            let y: Vec<usize> = x.iter().map(|v| (v + 1) % 2).collect();
            let t = empirical_type(&[Alphabet::indexed("X", 3).unwrap(), bits("Y")], &[&x, &y]).unwrap();
            let f = t.frequencies::<f64>();
            proptest::prop_assert!((f.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            proptest::prop_assert_eq!(t.counts().iter().sum::<u64>() as usize, x.len());
        }
    }
}
