//! Scenario drivers producing result tables.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;

use crate::bounds::{self, corollary_bound, prop1_bound, theorem1_bound, trace_distance};
use crate::error::{Error, Result};
use crate::exact_dynamics::{self, LiebRobinsonProbe, ObservableOnSubset, Propagator};
use crate::hartree::{self, DensityMatrix};
use crate::linalg::CMat;
use crate::operators::{self, bound_constants, BoundConstants, VtildeStrategy};
use crate::random;
use crate::symmetric_space::{self, SymmetricState};

use super::config::{ExperimentConfig, Scenario};
use super::fit::particle_number_slope;
use super::output::{Curve, Table};

/// Slack on every `lhs ≤ rhs` comparison.
pub const VIOLATION_SLACK: f64 = 1e-9;
/// Largest accepted telescoping residual.
pub const TELESCOPING_TOL: f64 = 1e-12;
/// Restarts used for the searched `|Ṽ|` when the config selects canonical.
pub const DEFAULT_SEARCH_RESTARTS: usize = 8;

pub fn run(cfg: &ExperimentConfig) -> Result<Table> {
    match cfg.scenario() {
        Scenario::Converge => run_convergence(cfg),
        Scenario::Lr => run_lr(cfg),
        Scenario::Corr => run_corr(cfg),
        Scenario::Bbgky => run_bbgky(cfg),
        Scenario::Bounds => run_bounds(cfg),
    }
}

fn require(cfg: &ExperimentConfig, scenario: Scenario) -> Result<()> {
    if cfg.scenario() != scenario {
        return Err(Error::InvalidArgument(format!(
            "config describes scenario `{}`, not `{scenario}`",
            cfg.scenario()
        )));
    }
    Ok(())
}

fn constants(cfg: &ExperimentConfig, strategy: VtildeStrategy) -> BoundConstants {
    bound_constants(&cfg.spec, operators::vtilde(&cfg.spec, strategy))
}

/// Exact symmetric-subspace trajectory of `φ^{⊗N}` on the config time grid.
fn exact_trajectory(cfg: &ExperimentConfig, n: usize) -> Result<Vec<SymmetricState>> {
    let basis = Arc::new(symmetric_space::enumerate_basis(cfg.spec.d(), n)?);
    let h = symmetric_space::build_hamiltonian_on(&cfg.spec, &basis)?;
    let psi0 = symmetric_space::embed_product_state_in(&cfg.initial_phi, basis)?;
    exact_dynamics::evolve_exact(&h, &psi0, cfg.time_grid())
}

fn flag(lhs: f64, rhs: f64) -> bool {
    lhs > rhs + VIOLATION_SLACK
}

fn fmt_t(t: f64) -> String {
    format!("{t}")
}

pub fn run_convergence(cfg: &ExperimentConfig) -> Result<Table> {
    require(cfg, Scenario::Converge)?;
    let times = cfg.time_grid();
    let strategy = cfg.vtilde_strategy();
    let consts = constants(cfg, strategy);
    let gamma0 = DensityMatrix::pure(&cfg.initial_phi);
    let mean_field = hartree::hartree_evolve(&gamma0, &cfg.spec, times, cfg.integrator_tol())?;

    let distances: Vec<Vec<f64>> = cfg
        .n_values()
        .par_iter()
        .map(|&n| {
            exact_trajectory(cfg, n)?
                .iter()
                .zip(&mean_field.states)
                .map(|(state, gamma)| trace_distance(gamma, &symmetric_space::rdm(state, 1)?))
                .collect()
        })
        .collect::<Result<_>>()?;

    let mut table = Table::new(
        &cfg.hash(),
        &["row", "vtilde_strategy", "N", "t", "trace_distance", "theorem1_bound", "ratio", "slope"],
    );
    for (&n, dists) in cfg.n_values().iter().zip(&distances) {
        let mut dist_curve = Vec::new();
        let mut bound_curve = Vec::new();
        for (&t, &dist) in times.iter().zip(dists) {
            let bound = theorem1_bound(&consts, n, t);
            if flag(dist, bound) {
                table.violations += 1;
            }
            table.push(&[
                ("row", "data".into()),
                ("vtilde_strategy", strategy.label().into()),
                ("N", n.into()),
                ("t", t.into()),
                ("trace_distance", dist.into()),
                ("theorem1_bound", bound.into()),
                ("ratio", (dist * n as f64).into()),
            ]);
            dist_curve.push((t, dist));
            bound_curve.push((t, bound));
        }
        table.curves.push(Curve {
            name: format!("converge_N{n}_trace_distance"),
            x_label: "t".into(),
            y_label: "trace_distance".into(),
            points: dist_curve,
        });
        table.curves.push(Curve {
            name: format!("converge_N{n}_theorem1_bound"),
            x_label: "t".into(),
            y_label: "theorem1_bound".into(),
            points: bound_curve,
        });
    }
    for (i, &t) in times.iter().enumerate().filter(|(_, t)| **t > 0.0) {
        let points: Vec<(usize, f64)> = cfg.n_values().iter().zip(&distances).map(|(&n, d)| (n, d[i])).collect();
        let slope = particle_number_slope(&points, cfg.spec.m_max());
        table.push(&[
            ("row", "fit".into()),
            ("vtilde_strategy", strategy.label().into()),
            ("t", t.into()),
            ("slope", slope.into()),
        ]);
        table.curves.push(Curve {
            name: format!("converge_t{}_distance_vs_N", fmt_t(t)),
            x_label: "N".into(),
            y_label: "trace_distance".into(),
            points: points.iter().map(|&(n, d)| (n as f64, d)).collect(),
        });
    }
    Ok(table)
}

/// Seeded observable pair for block sizes `(m, n)`; independent of `N`.
pub fn sample_observables(cfg: &ExperimentConfig, pair_index: usize, sample: usize) -> (CMat, CMat) {
    let [m, n] = cfg.raw.observables.pairs[pair_index];
    let d = cfg.spec.d();
    let mut rng = random::stream(cfg.seed(), ((pair_index as u64) << 32) | sample as u64);
    let a = random::normalized_hermitian(d.pow(m as u32), &mut rng);
    let b = random::normalized_hermitian(d.pow(n as u32), &mut rng);
    (a, b)
}

fn check_blocks(cfg: &ExperimentConfig, n_particles: usize) -> Result<()> {
    for (i, [m, n]) in cfg.raw.observables.pairs.iter().enumerate() {
        if m + n > n_particles {
            return Err(Error::InvalidArgument(format!(
                "observables.pairs[{i}] needs {} particles but N = {n_particles}",
                m + n
            )));
        }
    }
    Ok(())
}

pub fn run_lr(cfg: &ExperimentConfig) -> Result<Table> {
    require(cfg, Scenario::Lr)?;
    let times = cfg.time_grid();
    let consts = constants(cfg, cfg.vtilde_strategy());
    let d = cfg.spec.d();
    for &n in cfg.n_values() {
        exact_dynamics::full_space_dim(d, n)?;
        check_blocks(cfg, n)?;
    }
    let pairs = &cfg.raw.observables.pairs;
    let samples = cfg.raw.observables.samples;

    let per_n: Vec<Vec<Vec<Vec<f64>>>> = cfg
        .n_values()
        .par_iter()
        .map(|&n| {
            let probe = LiebRobinsonProbe::new(&cfg.spec, n)?;
            (0..pairs.len())
                .map(|p| {
                    let [m, k] = pairs[p];
                    (0..samples)
                        .map(|s| {
                            let (a, b) = sample_observables(cfg, p, s);
                            let a = ObservableOnSubset::new((1..=m).collect(), a, d)?;
                            let b = ObservableOnSubset::new((m + 1..=m + k).collect(), b, d)?;
                            probe.growth(&a, &b, times)
                        })
                        .collect()
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let mut table = Table::new(
        &cfg.hash(),
        &["row", "N", "m", "n", "sample", "t", "lhs", "rhs", "violation"],
    );
    for (&n_particles, by_pair) in cfg.n_values().iter().zip(&per_n) {
        for (p, by_sample) in by_pair.iter().enumerate() {
            let [m, n] = pairs[p];
            let mut worst = vec![0.0f64; times.len()];
            let mut rhs_curve = Vec::with_capacity(times.len());
            for (s, values) in by_sample.iter().enumerate() {
                let (a, b) = sample_observables(cfg, p, s);
                let (na, nb) = (operators::operator_norm(&a), operators::operator_norm(&b));
                for (i, (&t, &lhs)) in times.iter().zip(values).enumerate() {
                    let rhs = prop1_bound(m, n, na, nb, &consts, n_particles, t);
                    let violated = flag(lhs, rhs);
                    table.violations += violated as usize;
                    worst[i] = worst[i].max(lhs);
                    if s == 0 {
                        rhs_curve.push((t, rhs));
                    }
                    table.push(&[
                        ("row", "data".into()),
                        ("N", n_particles.into()),
                        ("m", m.into()),
                        ("n", n.into()),
                        ("sample", s.into()),
                        ("t", t.into()),
                        ("lhs", lhs.into()),
                        ("rhs", rhs.into()),
                        ("violation", (violated as usize).into()),
                    ]);
                }
            }
            table.curves.push(Curve {
                name: format!("lr_N{n_particles}_m{m}_n{n}_max_lhs"),
                x_label: "t".into(),
                y_label: "max_commutator_norm".into(),
                points: times.iter().copied().zip(worst).collect(),
            });
            table.curves.push(Curve {
                name: format!("lr_N{n_particles}_m{m}_n{n}_rhs_sample0"),
                x_label: "t".into(),
                y_label: "prop1_bound".into(),
                points: rhs_curve,
            });
        }
    }
    Ok(table)
}

pub fn run_corr(cfg: &ExperimentConfig) -> Result<Table> {
    require(cfg, Scenario::Corr)?;
    let times = cfg.time_grid();
    let consts = constants(cfg, cfg.vtilde_strategy());
    for &n in cfg.n_values() {
        check_blocks(cfg, n)?;
    }
    let pairs = &cfg.raw.observables.pairs;
    let samples = cfg.raw.observables.samples;
    let observables: Vec<Vec<(CMat, CMat)>> = (0..pairs.len())
        .map(|p| (0..samples).map(|s| sample_observables(cfg, p, s)).collect())
        .collect();

    // gaps[N][pair][sample][t]
    let gaps: Vec<Vec<Vec<Vec<f64>>>> = cfg
        .n_values()
        .par_iter()
        .map(|&n| {
            let states = exact_trajectory(cfg, n)?;
            let mut out = vec![vec![Vec::with_capacity(times.len()); samples]; pairs.len()];
            for state in &states {
                let mut cache: BTreeMap<usize, DensityMatrix> = BTreeMap::new();
                for (p, [m, k]) in pairs.iter().enumerate() {
                    for order in [*m, *k, m + k] {
                        if !cache.contains_key(&order) {
                            cache.insert(order, symmetric_space::rdm(state, order)?);
                        }
                    }
                    for (s, (a, b)) in observables[p].iter().enumerate() {
                        let gap = exact_dynamics::correlation_gap_from_rdms(&cache[&(m + k)], &cache[m], &cache[k], a, b)?;
                        out[p][s].push(gap.trace_form);
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let mut table = Table::new(
        &cfg.hash(),
        &["row", "N", "m", "n", "sample", "t", "lhs", "rhs", "violation", "slope"],
    );
    for (&n_particles, by_pair) in cfg.n_values().iter().zip(&gaps) {
        for (p, by_sample) in by_pair.iter().enumerate() {
            let [m, n] = pairs[p];
            for (s, values) in by_sample.iter().enumerate() {
                let (a, b) = &observables[p][s];
                let (na, nb) = (operators::operator_norm(a), operators::operator_norm(b));
                for (&t, &lhs) in times.iter().zip(values) {
                    let rhs = corollary_bound(m, n, na, nb, &consts, n_particles, t);
                    let violated = flag(lhs, rhs);
                    table.violations += violated as usize;
                    table.push(&[
                        ("row", "data".into()),
                        ("N", n_particles.into()),
                        ("m", m.into()),
                        ("n", n.into()),
                        ("sample", s.into()),
                        ("t", t.into()),
                        ("lhs", lhs.into()),
                        ("rhs", rhs.into()),
                        ("violation", (violated as usize).into()),
                    ]);
                }
            }
        }
    }
    for (p, [m, n]) in pairs.iter().enumerate() {
        for (i, &t) in times.iter().enumerate().filter(|(_, t)| **t > 0.0) {
            let points: Vec<(usize, f64)> = cfg
                .n_values()
                .iter()
                .zip(&gaps)
                .map(|(&np, g)| (np, g[p].iter().map(|v| v[i]).fold(0.0, f64::max)))
                .collect();
            let slope = particle_number_slope(&points, cfg.spec.m_max());
            table.push(&[
                ("row", "fit".into()),
                ("m", (*m).into()),
                ("n", (*n).into()),
                ("t", t.into()),
                ("slope", slope.into()),
            ]);
            table.curves.push(Curve {
                name: format!("corr_m{m}_n{n}_t{}_max_gap_vs_N", fmt_t(t)),
                x_label: "N".into(),
                y_label: "max_correlation_gap".into(),
                points: points.iter().map(|&(np, g)| (np as f64, g)).collect(),
            });
        }
    }
    Ok(table)
}

/// Residuals below this are rounding noise and carry no order information.
pub const RESIDUAL_FLOOR: f64 = 1e-12;

/// Richardson order estimate `log2(r(dt) / r(dt/2))`; `None` when the coarse
/// residual is already at the rounding floor.
pub fn richardson_order(coarse: f64, fine: f64) -> Option<f64> {
    (coarse > RESIDUAL_FLOOR && fine > 0.0).then(|| (coarse / fine).log2())
}

pub fn run_bbgky(cfg: &ExperimentConfig) -> Result<Table> {
    require(cfg, Scenario::Bbgky)?;
    let times = cfg.time_grid();
    let settings = &cfg.raw.bbgky;
    let dt = settings.dt;
    let reach = cfg.spec.max_present_order().max(1) - 1;
    for &n in cfg.n_values() {
        if let Some(&k) = settings.k_values.iter().find(|&&k| k + reach > n) {
            return Err(Error::InvalidArgument(format!(
                "hierarchy level {k} needs {} particles but N = {n}",
                k + reach
            )));
        }
    }
    let gamma0 = DensityMatrix::pure(&cfg.initial_phi);
    let mean_field = hartree::hartree_evolve(&gamma0, &cfg.spec, times, cfg.integrator_tol())?;

    struct PerN {
        residuals: Vec<Vec<(f64, f64)>>,
        telescoping: Vec<Vec<(usize, f64)>>,
    }

    let per_n: Vec<PerN> = cfg
        .n_values()
        .par_iter()
        .map(|&n| {
            let basis = Arc::new(symmetric_space::enumerate_basis(cfg.spec.d(), n)?);
            let h = symmetric_space::build_hamiltonian_on(&cfg.spec, &basis)?;
            let psi0 = symmetric_space::embed_product_state_in(&cfg.initial_phi, basis)?;
            let prop = Propagator::new(&h)?;
            let residuals = settings
                .k_values
                .iter()
                .map(|&k| {
                    times
                        .iter()
                        .map(|&t| {
                            let coarse = exact_dynamics::bbgky_residual(&cfg.spec, &prop, &psi0, k, t, dt)?;
                            let fine = exact_dynamics::bbgky_residual(&cfg.spec, &prop, &psi0, k, t, dt / 2.0)?;
                            Ok((coarse, fine))
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;

            let top = settings.telescoping_max_m.min(n - 1);
            let states = exact_dynamics::evolve_with(&prop, &psi0, times)?;
            let telescoping = states
                .iter()
                .zip(&mean_field.states)
                .map(|(state, gamma)| {
                    let rdms: BTreeMap<usize, DensityMatrix> = (1..=top + 1)
                        .map(|k| Ok((k, symmetric_space::rdm(state, k)?)))
                        .collect::<Result<_>>()?;
                    (1..=top)
                        .map(|m| Ok((m, bounds::telescoping_residual(&rdms, gamma, m)?)))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(PerN { residuals, telescoping })
        })
        .collect::<Result<_>>()?;

    let mut table = Table::new(
        &cfg.hash(),
        &["row", "N", "k", "m", "t", "dt", "residual", "order"],
    );
    for (&n, res) in cfg.n_values().iter().zip(&per_n) {
        for (ki, &k) in settings.k_values.iter().enumerate() {
            let mut coarse_curve = Vec::new();
            for (&t, &(coarse, fine)) in times.iter().zip(&res.residuals[ki]) {
                for (step, r) in [(dt, coarse), (dt / 2.0, fine)] {
                    table.push(&[
                        ("row", "residual".into()),
                        ("N", n.into()),
                        ("k", k.into()),
                        ("t", t.into()),
                        ("dt", step.into()),
                        ("residual", r.into()),
                    ]);
                }
                table.push(&[
                    ("row", "order".into()),
                    ("N", n.into()),
                    ("k", k.into()),
                    ("t", t.into()),
                    ("order", richardson_order(coarse, fine).into()),
                ]);
                coarse_curve.push((t, coarse));
            }
            table.curves.push(Curve {
                name: format!("bbgky_N{n}_k{k}_residual"),
                x_label: "t".into(),
                y_label: "residual".into(),
                points: coarse_curve,
            });
        }
        for (&t, entries) in times.iter().zip(&res.telescoping) {
            for &(m, r) in entries {
                table.violations += (r > TELESCOPING_TOL) as usize;
                table.push(&[
                    ("row", "telescoping".into()),
                    ("N", n.into()),
                    ("m", m.into()),
                    ("t", t.into()),
                    ("residual", r.into()),
                ]);
            }
        }
    }
    Ok(table)
}

pub fn run_bounds(cfg: &ExperimentConfig) -> Result<Table> {
    require(cfg, Scenario::Bounds)?;
    let restarts = match cfg.vtilde_strategy() {
        VtildeStrategy::Search { restarts, .. } => restarts,
        VtildeStrategy::Canonical => DEFAULT_SEARCH_RESTARTS,
    };
    let strategies = [
        VtildeStrategy::Canonical,
        VtildeStrategy::Search {
            restarts,
            seed: cfg.seed(),
        },
    ];
    let mut table = Table::new(
        &cfg.hash(),
        &[
            "row",
            "vtilde_strategy",
            "M",
            "sum_l1_v",
            "sum_l2_v",
            "vtilde",
            "lambda_v",
            "N",
            "t",
            "theorem1_bound",
            "prop1_bound",
            "corollary_bound",
        ],
    );
    for strategy in strategies {
        let c = constants(cfg, strategy);
        table.push(&[
            ("row", "constants".into()),
            ("vtilde_strategy", strategy.label().into()),
            ("M", c.m_max.into()),
            ("sum_l1_v", c.sum_l1_v.into()),
            ("sum_l2_v", c.sum_l2_v.into()),
            ("vtilde", c.vtilde.into()),
            ("lambda_v", c.lambda_v.into()),
        ]);
        for &n in cfg.n_values() {
            let mut curve = Vec::new();
            for &t in cfg.time_grid() {
                let th = theorem1_bound(&c, n, t);
                table.push(&[
                    ("row", "bound".into()),
                    ("vtilde_strategy", strategy.label().into()),
                    ("N", n.into()),
                    ("t", t.into()),
                    ("theorem1_bound", th.into()),
                    ("prop1_bound", prop1_bound(1, 1, 1.0, 1.0, &c, n, t).into()),
                    ("corollary_bound", corollary_bound(1, 1, 1.0, 1.0, &c, n, t).into()),
                ]);
                curve.push((t, th));
            }
            table.curves.push(Curve {
                name: format!("bounds_{}_N{n}_theorem1", strategy.label()),
                x_label: "t".into(),
                y_label: "theorem1_bound".into(),
                points: curve,
            });
        }
    }
    Ok(table)
}
