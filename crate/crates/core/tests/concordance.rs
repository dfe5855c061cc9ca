//! Monte Carlo estimates against exact enumeration and analytic values.

use horton::distributions::{igw, order_distribution, OffspringDistribution};
use horton::oracle::{enumerate_conditional, Interval};
use horton::sampler::{mc_tokunaga, Estimate, SampleConfig};

fn cfg(seed: u64, n: u64) -> SampleConfig {
    SampleConfig {
        seed,
        n_trees: n,
        ..Default::default()
    }
}

fn test_laws() -> [OffspringDistribution; 2] {
    [
        OffspringDistribution::binary(),
        OffspringDistribution::finite(vec![0.6, 0.0, 0.3, 0.1]).unwrap(),
    ]
}

/// Within 3 SE of the interval midpoint; the interval is far narrower than
/// the sampling error. Degenerate estimates (SE 0) must land inside it.
fn agrees(e: Estimate, t: Interval) -> bool {
    t.contains(e.value) || e.within(0.5 * (t.lower + t.upper), 3.0)
}

#[test]
fn mc_matches_oracle() {
    for (li, law) in test_laws().iter().enumerate() {
        for k in 2..=3 {
            let exact = enumerate_conditional(law, k, 400).unwrap();
            assert!(exact.sufficient);
            let est = mc_tokunaga(law, k as u32, &cfg(100 + li as u64 * 10 + k as u64, 40_000)).unwrap();
            for (i, j) in exact.tokunaga.t_side.pairs() {
                let t = exact.side_interval(i, j);
                let e = est.t_side(i, j);
                assert!(agrees(e, t), "law {li} K={k} T({i},{j}): {e:?} vs {t:?}");
                let t = exact.regular_interval(i, j);
                let e = est.t_regular(i, j);
                assert!(agrees(e, t), "law {li} K={k} T^o({i},{j}): {e:?} vs {t:?}");
            }
            for (m, b) in exact.branch_means.iter().enumerate() {
                let e = est.branch_means[m];
                assert!(agrees(e, *b), "law {li} K={k} N_{}: {e:?} vs {b:?}", m + 1);
            }
        }
    }
}

#[test]
fn acceptance_rate_tracks_order_probability() {
    for law in test_laws().into_iter().chain([igw(0.75).unwrap()]) {
        let od = order_distribution(&law, 4).unwrap();
        for k in 2..=4u32 {
            let est = mc_tokunaga(&law, k, &cfg(7 + k as u64, 5_000)).unwrap();
            assert!(
                est.acceptance.within(od.pi(k as usize), 3.0),
                "{} K={k}: {:?} vs {}",
                law.kind_name(),
                est.acceptance,
                od.pi(k as usize)
            );
        }
    }
}

#[test]
fn coordination_across_conditioning_orders() {
    let law = OffspringDistribution::binary();
    let a = mc_tokunaga(&law, 3, &cfg(31, 50_000)).unwrap().t_side(1, 2);
    let b = mc_tokunaga(&law, 4, &cfg(32, 50_000)).unwrap().t_side(1, 2);
    let se = (a.se * a.se + b.se * b.se).sqrt();
    assert!((a.value - b.value).abs() < 3.0 * se, "{a:?} vs {b:?}");
}

#[test]
fn principal_coefficients_are_nonnegative_up_to_noise() {
    for law in [OffspringDistribution::binary(), igw(0.75).unwrap(), OffspringDistribution::zipf_example()] {
        let est = mc_tokunaga(&law, 4, &cfg(5, 5_000)).unwrap();
        for j in 2..=4 {
            let e = est.t_side(j - 1, j);
            assert!(e.value >= -3.0 * e.se, "{} T({},{j}) = {e:?}", law.kind_name(), j - 1);
        }
    }
}

#[test]
fn igw_regular_coefficients_are_geometric() {
    let est = mc_tokunaga(&igw(0.75).unwrap(), 4, &cfg(11, 100_000)).unwrap();
    let e = est.t_regular(2, 4);
    assert!(e.within(4.0, 3.0), "{e:?}");
}
