//! Convergence tables behind `pta report`: mean ratio versus its limit,
//! Kolmogorov-Smirnov distance of standardized Monte Carlo draws, and
//! empirical tail-decay rates converging to the rate function.

use pta::asymptotics::{clt_standardize, constants, empirical_tail_rate, ks_distance_std_normal, rate};
use pta::exactdist::exact_pmf_log;
use pta::simulator::monte_carlo;
use pta::{ContaminationModel, Result};

use crate::table::{Cell, Table};

const LLN_GRID: [usize; 8] = [10, 20, 50, 100, 200, 500, 1000, 2000];
const CLT_GRID: [usize; 3] = [100, 400, 1600];
const LDP_GRID: [usize; 3] = [500, 1000, 2000];

pub fn run_report(
    m: &ContaminationModel,
    n: Option<usize>,
    reps: u64,
    seed: u64,
    xs: &[f64],
) -> Result<Vec<Table>> {
    let c = constants(m);

    let mut lln = Table::new("lln", vec!["n", "ratio", "mu"]);
    for grid_n in LLN_GRID {
        let mean = pta::analytic::closed_form_moments(m, grid_n)?.mean;
        lln.push(vec![
            Cell::U64(grid_n as u64),
            Cell::F64(mean / grid_n as f64),
            Cell::F64(c.mu),
        ]);
    }

    let mut clt_ns: Vec<usize> = CLT_GRID.to_vec();
    if let Some(n) = n {
        clt_ns.push(n);
        clt_ns.sort_unstable();
        clt_ns.dedup();
    }
    let mut clt = Table::new("clt", vec!["n", "ks"]);
    for grid_n in clt_ns {
        let summary = monte_carlo(m, grid_n, reps, seed)?;
        let z = clt_standardize(&summary, &c)?;
        clt.push(vec![
            Cell::U64(grid_n as u64),
            Cell::F64(ks_distance_std_normal(&z)),
        ]);
    }

    let mut columns = vec!["x".to_string(), "I".to_string()];
    columns.extend(LDP_GRID.iter().map(|n| format!("a_{n}")));
    let mut ldp = Table::new("ldp", columns);
    let tables: Vec<_> = LDP_GRID
        .iter()
        .map(|&grid_n| exact_pmf_log(m, grid_n))
        .collect::<Result<_>>()?;
    for &x in xs {
        let mut row = vec![Cell::F64(x), Cell::F64(rate(m, x).rate)];
        row.extend(tables.iter().map(|t| Cell::F64(empirical_tail_rate(t, x))));
        ldp.push(row);
    }

    Ok(vec![lln, clt, ldp])
}
