//! The lazy engine samples the same law as the explicit codebook. These
//! checks compare the two by Monte Carlo on small blocks.

use qcoord::families;
use qcoord::model::ValidatedExtension;
use qcoord::protocol::{Engine, SimSpec, Simulation, Simulator};

fn spec(n: usize, delta: f64, engine: Engine, bits: [f64; 4]) -> SimSpec {
    SimSpec {
        n,
        delta,
        seed: 5,
        trials: 40_000,
        engine,
        gamma_factor: None,
        rate: bits[0] / n as f64,
        rate0: Some(bits[1] / n as f64),
        rate_z: Some(bits[2] / n as f64),
        rate0_z: Some(bits[3] / n as f64),
    }
}

fn mean_type(run: &Simulation) -> Vec<f64> {
    let k = run.traces[0].counts.len();
    let scale = (run.n * run.traces.len()) as f64;
    let mut mean = vec![0.0; k];
    for t in &run.traces {
        for (m, &c) in mean.iter_mut().zip(&t.counts) {
            *m += c as f64 / scale;
        }
    }
    mean
}

fn rate_of(run: &Simulation, f: impl Fn(&qcoord::protocol::SimulationTrace) -> bool) -> f64 {
    run.traces.iter().filter(|t| f(t)).count() as f64 / run.traces.len() as f64
}

fn compare(ext: &ValidatedExtension, n: usize, delta: f64, bits: [f64; 4]) {
    let explicit = Simulator::new(ext, &spec(n, delta, Engine::Explicit, bits))
        .unwrap()
        .run()
        .unwrap();
    let lazy = Simulator::new(ext, &spec(n, delta, Engine::Lazy, bits))
        .unwrap()
        .run()
        .unwrap();
    let (a, b) = (mean_type(&explicit), mean_type(&lazy));
    let l1: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum();
    assert!(l1 < 0.02, "n = {n}: mean types differ by {l1}\n{a:?}\n{b:?}");
    for f in [
        |t: &qcoord::protocol::SimulationTrace| t.y.decoder_fallback,
        |t: &qcoord::protocol::SimulationTrace| t.decoded_typical,
        |t: &qcoord::protocol::SimulationTrace| {
            !t.bob_charlie_match || t.z.as_ref().is_some_and(|z| z.ell != z.ell_hat)
        },
    ] {
        let (p, q) = (rate_of(&explicit, f), rate_of(&lazy, f));
        assert!((p - q).abs() < 0.015, "n = {n}: event rates {p} vs {q}");
    }
}

#[test]
fn cascade_engines_agree() {
    let ext = ValidatedExtension::self_consistent(families::bsc_cascade(0.1).unwrap()).unwrap();
    compare(&ext, 6, 0.05, [1.0, 3.0, 1.0, 2.0]);
    compare(&ext, 8, 0.04, [1.0, 3.0, 1.0, 3.0]);
}

#[test]
fn two_node_engines_agree() {
    let ext = ValidatedExtension::new(
        families::example1_decomposition_b().unwrap(),
        families::example1_coarse_target().unwrap(),
    )
    .unwrap();
    let mut s = [1.0, 4.0, 0.0, 0.0];
    for n in [5, 8] {
        let mk = |engine| SimSpec {
            rate_z: None,
            rate0_z: None,
            ..spec(n, 0.06, engine, s)
        };
        let a = mean_type(&Simulator::new(&ext, &mk(Engine::Explicit)).unwrap().run().unwrap());
        let b = mean_type(&Simulator::new(&ext, &mk(Engine::Lazy)).unwrap().run().unwrap());
        let l1: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum();
        assert!(l1 < 0.02, "n = {n}: {l1}\n{a:?}\n{b:?}");
        s[1] += 1.0;
    }
}
