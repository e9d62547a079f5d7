use hartree_core::experiments::config::config_hash;
use hartree_core::experiments::output::Cell;
use hartree_core::experiments::{load_config, run, runner, Scenario, Table};
use serde_json::{json, Value};

const S: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn sx() -> Value {
    json!([[[0, 0], [1, 0]], [[1, 0], [0, 0]]])
}

fn szz() -> Value {
    json!([
        [[1, 0], [0, 0], [0, 0], [0, 0]],
        [[0, 0], [-1, 0], [0, 0], [0, 0]],
        [[0, 0], [0, 0], [-1, 0], [0, 0]],
        [[0, 0], [0, 0], [0, 0], [1, 0]]
    ])
}

fn config(scenario: &str, potentials: Value, n_values: Value, times: Value, extra: Value) -> String {
    let mut cfg = json!({
        "spec": {"d": 2, "m_max": 2, "potentials": potentials},
        "scenario": scenario,
        "n_values": n_values,
        "time_grid": times,
        "initial_phi": [[S, 0], [S, 0]],
        "seed": 9
    });
    for (k, v) in extra.as_object().unwrap() {
        cfg[k] = v.clone();
    }
    cfg.to_string()
}

fn standard(scenario: &str, n_values: Value, times: Value, extra: Value) -> String {
    config(
        scenario,
        json!([{"order": 1, "matrix": sx()}, {"order": 2, "matrix": szz()}]),
        n_values,
        times,
        extra,
    )
}

fn column(table: &Table, kind: &str, name: &str) -> Vec<f64> {
    table.rows_of(kind).map(|r| table.value(r, name).unwrap_or(f64::NAN)).collect()
}

#[test]
fn convergence_rows_and_fits() {
    let cfg = load_config(&standard("converge", json!([4, 8, 16]), json!([0.0, 0.5, 1.0]), json!({})), "t").unwrap();
    let table = run(&cfg).unwrap();
    assert_eq!(table.violations, 0);
    let ts = column(&table, "data", "t");
    let dist = column(&table, "data", "trace_distance");
    let bound = column(&table, "data", "theorem1_bound");
    assert_eq!(ts.len(), 9);
    for i in 0..ts.len() {
        if ts[i] == 0.0 {
            assert!(dist[i] < 1e-14);
            assert_eq!(bound[i], 0.0);
        } else {
            assert!(dist[i] > 0.0 && dist[i] <= bound[i]);
        }
    }
    let slopes = column(&table, "fit", "slope");
    assert_eq!(slopes.len(), 2);
    assert!(slopes.iter().all(|s| *s < 0.0));
}

#[test]
fn one_body_only_spec_converges_exactly() {
    let text = config("converge", json!([{"order": 1, "matrix": sx()}]), json!([3, 6]), json!([0.0, 1.0, 2.0]), json!({}));
    let table = run(&load_config(&text, "t").unwrap()).unwrap();
    for d in column(&table, "data", "trace_distance") {
        assert!(d < 1e-8, "{d}");
    }
    for b in column(&table, "data", "theorem1_bound") {
        assert_eq!(b, 0.0);
    }
}

#[test]
fn lr_rows() {
    let text = standard(
        "lr",
        json!([5]),
        json!([0.0, 0.5, 1.0]),
        json!({"observables": {"pairs": [[1, 1], [2, 1]], "samples": 3}}),
    );
    let table = run(&load_config(&text, "t").unwrap()).unwrap();
    assert_eq!(table.rows.len(), 2 * 3 * 3);
    assert_eq!(table.violations, 0);
    let t = column(&table, "data", "t");
    let lhs = column(&table, "data", "lhs");
    let rhs = column(&table, "data", "rhs");
    for i in 0..t.len() {
        if t[i] == 0.0 {
            assert!(lhs[i] < 1e-14 && rhs[i] == 0.0);
        } else {
            assert!(lhs[i] > 0.0 && lhs[i] <= rhs[i]);
        }
    }

    let free = config("lr", json!([{"order": 1, "matrix": sx()}]), json!([4]), json!([0.0, 0.7]), json!({}));
    let table = run(&load_config(&free, "t").unwrap()).unwrap();
    assert!(column(&table, "data", "lhs").iter().all(|v| *v < 1e-12));
}

#[test]
fn lr_refuses_large_full_space() {
    let text = standard("lr", json!([20]), json!([0.0]), json!({}));
    let msg = run(&load_config(&text, "t").unwrap()).unwrap_err().to_string();
    assert!(msg.contains("largest admissible N is 14"), "{msg}");
}

#[test]
fn corr_rows() {
    let text = standard("corr", json!([4, 8, 16]), json!([0.0, 0.5]), json!({"observables": {"samples": 4}}));
    let table = run(&load_config(&text, "t").unwrap()).unwrap();
    assert_eq!(table.violations, 0);
    let t = column(&table, "data", "t");
    let lhs = column(&table, "data", "lhs");
    for i in 0..t.len() {
        if t[i] == 0.0 {
            assert!(lhs[i] < 1e-14);
        }
    }
    let slopes = column(&table, "fit", "slope");
    assert_eq!(slopes.len(), 1);
    assert!(slopes[0] < -0.5, "{}", slopes[0]);
}

#[test]
fn corr_rejects_blocks_larger_than_n() {
    let text = standard("corr", json!([2, 4]), json!([0.0]), json!({"observables": {"pairs": [[2, 1]]}}));
    assert!(run(&load_config(&text, "t").unwrap()).is_err());
}

#[test]
fn bbgky_rows() {
    let text = standard(
        "bbgky",
        json!([4]),
        json!([0.0, 0.5]),
        json!({"bbgky": {"k_values": [1, 2], "dt": 0.01, "telescoping_max_m": 3}}),
    );
    let table = run(&load_config(&text, "t").unwrap()).unwrap();
    assert_eq!(table.violations, 0);
    let orders: Vec<f64> = column(&table, "order", "order").into_iter().filter(|o| !o.is_nan()).collect();
    assert!(orders.len() >= 3, "{orders:?}");
    for order in orders {
        assert!((1.8..=2.2).contains(&order), "{order}");
    }
    // the third time derivative of γ^(1) vanishes at t=0 for a real
    // Hamiltonian and real initial state
    let residuals = column(&table, "residual", "residual");
    assert!(residuals[0] < 1e-12);
    let tele = column(&table, "telescoping", "residual");
    assert_eq!(tele.len(), 2 * 3);
    assert!(tele.iter().all(|r| *r <= 1e-12));
}

#[test]
fn bounds_rows() {
    let text = config(
        "bounds",
        json!([{"order": 2, "matrix": szz()}]),
        json!([10, 100]),
        json!([0.0, 0.5]),
        json!({"vtilde_strategy": {"search": {"restarts": 2}}}),
    );
    let table = run(&load_config(&text, "t").unwrap()).unwrap();
    let s1 = column(&table, "constants", "sum_l1_v");
    assert_eq!(s1.len(), 2);
    assert!(s1.iter().all(|s| (s - 2.0).abs() < 1e-12));
    let vt = column(&table, "constants", "vtilde");
    assert_eq!(vt[0], 4.0);
    assert!(vt[1] >= vt[0]);
    let t = column(&table, "bound", "t");
    let th = column(&table, "bound", "theorem1_bound");
    for i in 0..t.len() {
        assert_eq!(t[i] == 0.0, th[i] == 0.0);
    }
}

#[test]
fn output_is_deterministic_and_hash_matches() {
    let text = standard("corr", json!([4, 6]), json!([0.0, 0.3]), json!({"observables": {"samples": 2}}));
    let cfg = load_config(&text, "t").unwrap();
    let a = run(&cfg).unwrap().to_csv_string();
    let b = run(&load_config(&text, "t").unwrap()).unwrap().to_csv_string();
    assert_eq!(a, b);

    let hash = config_hash(&cfg.raw);
    let first = a.lines().next().unwrap();
    assert!(first.starts_with(&format!("# config_hash={hash} ")));
    for line in a.lines().skip(2) {
        assert!(line.starts_with(&format!("{hash},")));
    }

    let reseeded = cfg.clone().with_seed(10).unwrap();
    assert_ne!(run(&reseeded).unwrap().to_csv_string(), a);
}

#[test]
fn scenario_mismatch_is_an_error() {
    let cfg = load_config(&standard("bounds", json!([4]), json!([0.0]), json!({})), "t").unwrap();
    assert_eq!(cfg.scenario(), Scenario::Bounds);
    assert!(runner::run_convergence(&cfg).is_err());
}

#[test]
fn plot_data_files() {
    let cfg = load_config(&standard("converge", json!([4, 8]), json!([0.0, 0.5]), json!({})), "t").unwrap();
    let table = run(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let paths = table.write_plot_data(dir.path()).unwrap();
    assert_eq!(paths.len(), table.curves.len());
    let text = std::fs::read_to_string(&paths[0]).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[1], "t,trace_distance");
    assert_eq!(lines[2].split(',').count(), 2);
    assert!(matches!(table.rows[0][0], Cell::Text(_)));
}
