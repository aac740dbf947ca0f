//! One function per subcommand. Each builds a [`Table`] ordered by D (then
//! by vector or battery pair) and reports whether the checked claim held.

use std::sync::atomic::{AtomicUsize, Ordering};

use linnik_core::arith::is_admissible;
use linnik_core::classgrp::{class_number, coset_check, squares_subgroup, ClassGroup};
use linnik_core::eisen::{partial_sum_scan, coefficient_identity_check};
use linnik_core::modsurf::{heegner_identity_check, reduce_form};
use linnik_core::ortho::{gram_form, grid_point};
use linnik_core::sphere::{attached_discriminant, enumerate_sphere, gauss_count_check};
use linnik_core::weyl::{
    discrepancy, discrepancy_trend, heegner_point, standard_boxes, standard_caps, weyl_sum, SphHarmonic, SurfaceTestFn,
};
use linnik_core::Error;
use rayon::prelude::*;

use crate::config::{RunConfig, ToolError};
use crate::output::{Cell, Table};

/// A finished table and whether every claim checked along the way held.
pub struct Outcome {
    pub table: Table,
    pub claims_hold: bool,
}

impl Outcome {
    fn plain(table: Table) -> Self {
        Outcome { table, claims_hold: true }
    }
}

/// Below this many items no progress is printed.
const PROGRESS_MIN: usize = 20_000;

/// Order-preserving parallel map with coarse progress on stderr.
fn par_map<T, R, F>(label: &str, items: &[T], f: F) -> Result<Vec<R>, ToolError>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R, Error> + Sync,
{
    let done = AtomicUsize::new(0);
    let total = items.len();
    let step = (total / 10).max(1);
    let out: Result<Vec<R>, Error> = items
        .par_iter()
        .map(|x| {
            let r = f(x);
            let k = done.fetch_add(1, Ordering::Relaxed) + 1;
            if total >= PROGRESS_MIN && k % step == 0 {
                eprintln!("{label}: {k}/{total}");
            }
            r
        })
        .collect();
    Ok(out?)
}

fn vector_cells(d: u64, v: [i64; 3]) -> Vec<Cell> {
    vec![d.into(), v[0].into(), v[1].into(), v[2].into()]
}

pub fn enumerate(cfg: &RunConfig) -> Result<Outcome, ToolError> {
    let mut t = Table::new(&["d", "x", "y", "z"]);
    let ds = cfg.ds();
    for (d, vs) in ds.iter().zip(par_map("enumerate", &ds, |&d| Ok(enumerate_sphere(d)))?) {
        for v in vs {
            t.push(vector_cells(*d, v.coords));
        }
    }
    Ok(Outcome::plain(t))
}

pub fn shapes(cfg: &RunConfig) -> Result<Outcome, ToolError> {
    let mut t = Table::new(&[
        "d",
        "x",
        "y",
        "z",
        "form_a",
        "form_b",
        "form_c",
        "reduced_a",
        "reduced_b",
        "reduced_c",
        "point_x",
        "point_y",
        "grid_num1",
        "grid_num2",
        "grid_den",
    ]);
    let ds = cfg.ds();
    let per_d = par_map("shapes", &ds, |&d| {
        enumerate_sphere(d)
            .into_iter()
            .map(|v| {
                let form = gram_form(&v)?;
                let (red, _) = reduce_form(&form)?;
                let p = heegner_point(&v)?;
                let g = grid_point(&v)?;
                let mut row = vector_cells(d, v.coords);
                row.extend([form.a, form.b, form.c, red.a, red.b, red.c].map(Cell::from));
                row.extend([p.x, p.y].map(Cell::from));
                row.extend([g.num[0], g.num[1], g.den].map(Cell::from));
                Ok(row)
            })
            .collect::<Result<Vec<_>, Error>>()
    })?;
    per_d.into_iter().flatten().for_each(|r| t.push(r));
    Ok(Outcome::plain(t))
}

pub fn gauss_check(cfg: &RunConfig) -> Result<Outcome, ToolError> {
    let mut t = Table::new(&["d", "count", "class_number", "branch", "pass"]);
    let ds = cfg.ds();
    let reports = par_map("gauss-check", &ds, |&d| {
        let h = match attached_discriminant(d) {
            Some(disc) => class_number(disc)?,
            None => 0,
        };
        Ok(gauss_count_check(d, h))
    })?;
    let mut ok = true;
    for r in reports {
        ok &= r.pass != Some(false);
        t.push(vec![r.d.into(), r.count.into(), r.class_number.into(), r.branch.to_string().into(), r.pass.into()]);
    }
    Ok(Outcome { table: t, claims_hold: ok })
}

fn element_order(g: &ClassGroup, i: usize) -> usize {
    let (mut x, mut k) = (i, 1);
    while x != g.principal {
        x = g.mul(x, i);
        k += 1;
    }
    k
}

/// One row per reduced form; `composition_row` lists the indices of
/// `f_i · f_j` for every `j`, separated by spaces.
pub fn classgroup(cfg: &RunConfig, disc: Option<i64>) -> Result<Outcome, ToolError> {
    let mut t = Table::new(&["disc", "index", "a", "b", "c", "order", "in_squares", "genus_index", "composition_row"]);
    let discs: Vec<i64> = match disc {
        Some(x) => vec![x],
        None => cfg.ds().into_iter().filter_map(attached_discriminant).collect(),
    };
    let groups = par_map("classgroup", &discs, |&x| {
        let g = ClassGroup::new(x)?;
        let squares = squares_subgroup(&g);
        let genus_index = g.order() / squares.len();
        let rows: Vec<Vec<Cell>> = (0..g.order())
            .map(|i| {
                let q = g.elements[i];
                let comp: Vec<String> = (0..g.order()).map(|j| g.mul(i, j).to_string()).collect();
                vec![
                    x.into(),
                    i.into(),
                    q.a.into(),
                    q.b.into(),
                    q.c.into(),
                    element_order(&g, i).into(),
                    squares.contains(&i).into(),
                    genus_index.into(),
                    comp.join(" ").into(),
                ]
            })
            .collect();
        Ok(rows)
    })?;
    groups.into_iter().flatten().for_each(|r| t.push(r));
    Ok(Outcome::plain(t))
}

/// Only admissible D are checked; elsewhere the sphere is empty.
pub fn coset_check_cmd(cfg: &RunConfig) -> Result<Outcome, ToolError> {
    let mut t = Table::new(&[
        "d",
        "disc",
        "h",
        "squares_size",
        "genus_index",
        "pd_size",
        "quotients_in_squares",
        "is_coset",
        "index_from_d",
        "index_from_disc",
    ]);
    let ds: Vec<u64> = cfg.ds().into_iter().filter(|&d| is_admissible(d)).collect();
    let reports = par_map("coset-check", &ds, |&d| coset_check(d))?;
    let mut ok = true;
    for r in reports {
        ok &= r.is_coset;
        t.push(vec![
            r.d.into(),
            r.disc.into(),
            r.h.into(),
            r.squares_size.into(),
            r.genus_index.into(),
            r.pd_size.into(),
            r.quotients_in_squares.into(),
            r.is_coset.into(),
            r.index_from_d.into(),
            r.index_from_disc.into(),
        ]);
    }
    Ok(Outcome { table: t, claims_hold: ok })
}

pub fn heegner_check(cfg: &RunConfig) -> Result<Outcome, ToolError> {
    let mut t = Table::new(&["d", "x", "y", "z", "residual", "pass"]);
    let ds = cfg.ds();
    let tol = cfg.tolerance;
    let per_d = par_map("heegner-check", &ds, |&d| {
        enumerate_sphere(d)
            .into_iter()
            .map(|v| match heegner_identity_check(&v, tol) {
                Ok(r) => Ok((v.coords, r, true)),
                Err(Error::HeegnerMismatch { residual, .. }) => Ok((v.coords, residual, false)),
                Err(e) => Err(e),
            })
            .collect::<Result<Vec<_>, Error>>()
    })?;
    let mut ok = true;
    for (d, rows) in ds.iter().zip(per_d) {
        for (v, residual, pass) in rows {
            ok &= pass;
            let mut row = vector_cells(*d, v);
            row.extend([residual.into(), pass.into()]);
            t.push(row);
        }
    }
    Ok(Outcome { table: t, claims_hold: ok })
}

pub fn weyl(cfg: &RunConfig, battery: &[(SphHarmonic, SurfaceTestFn)]) -> Result<Outcome, ToolError> {
    let mut t = Table::new(&["d", "omega", "phi", "sum", "count", "normalized"]);
    let ds = cfg.ds();
    let per_d =
        par_map("weyl", &ds, |&d| battery.iter().map(|(o, p)| weyl_sum(d, o, p)).collect::<Result<Vec<_>, _>>())?;
    for r in per_d.into_iter().flatten() {
        t.push(vec![
            r.index.into(),
            r.omega_id.into(),
            r.phi_id.into(),
            r.sum.into(),
            r.count.into(),
            r.normalized.into(),
        ]);
    }
    Ok(Outcome::plain(t))
}

/// Per-D statistics, or dyadic-block medians when `k_range` is given.
pub fn discrepancy_cmd(cfg: &RunConfig, k_range: Option<(u32, u32)>) -> Result<Outcome, ToolError> {
    let caps = standard_caps();
    let boxes = standard_boxes();
    if let Some((k0, k1)) = k_range {
        let mut t = Table::new(&["k", "d_count", "median", "max"]);
        for r in discrepancy_trend(k0..=k1, &cfg.filter, &caps, &boxes)? {
            t.push(vec![r.k.into(), r.d_count.into(), r.median.into(), r.max.into()]);
        }
        return Ok(Outcome::plain(t));
    }
    let mut t = Table::new(&["d", "count", "max_cap_dev", "max_box_dev", "max_joint_dev", "worst_cap", "worst_box"]);
    let ds = cfg.ds();
    for s in par_map("discrepancy", &ds, |&d| discrepancy(d, &caps, &boxes))? {
        t.push(vec![
            s.d.into(),
            s.count.into(),
            s.max_cap_dev.into(),
            s.max_box_dev.into(),
            s.max_joint_dev.into(),
            s.worst_pair.map(|p| p.0).into(),
            s.worst_pair.map(|p| p.1).into(),
        ]);
    }
    Ok(Outcome::plain(t))
}

/// Runs n = 1..=dmax. Coefficient gaps and invariance residuals are both
/// held to the tolerance; failing vectors are listed on stderr.
pub fn a1_check(cfg: &RunConfig, battery: &[(SphHarmonic, SurfaceTestFn)]) -> Result<Outcome, ToolError> {
    let r = coefficient_identity_check(cfg.d_max, battery, cfg.tolerance, cfg.seed)?;
    let mut t = Table::new(&["n", "omega", "phi", "a_n_eisenstein", "a_n_weyl", "abs_gap"]);
    let mut ok = r.invariance_failures.is_empty() && r.projection_mismatches.is_empty();
    for row in r.rows {
        ok &= row.abs_gap < cfg.tolerance;
        t.push(vec![
            row.n.into(),
            row.omega_id.into(),
            row.phi_id.into(),
            row.a_n_eisenstein.into(),
            row.a_n_weyl.into(),
            row.abs_gap.into(),
        ]);
    }
    for f in &r.invariance_failures {
        eprintln!("{}", serde_json::json!({ "invariance_failure": f }));
    }
    for v in &r.projection_mismatches {
        eprintln!("{}", serde_json::json!({ "projection_mismatch": v }));
    }
    Ok(Outcome { table: t, claims_hold: ok })
}

/// The fit summary per battery pair, or the partial-sum series with
/// `series`.
pub fn scan(x: u64, series: bool, battery: &[(SphHarmonic, SurfaceTestFn)]) -> Result<Outcome, ToolError> {
    let reports = battery.iter().map(|(o, p)| partial_sum_scan(x, o, p)).collect::<Result<Vec<_>, _>>()?;
    if series {
        let mut t = Table::new(&["omega", "phi", "x", "partial_sum"]);
        for r in reports {
            for (x, s) in r.series {
                t.push(vec![r.omega_id.as_str().into(), r.phi_id.as_str().into(), x.into(), s.into()]);
            }
        }
        return Ok(Outcome::plain(t));
    }
    let mut t = Table::new(&[
        "omega",
        "phi",
        "x_max",
        "fitted_exponent",
        "fitted_constant",
        "identically_zero",
        "final_ratio",
        "density_prediction",
        "benchmark_exponent",
    ]);
    for r in reports {
        t.push(vec![
            r.omega_id.into(),
            r.phi_id.into(),
            r.x_max.into(),
            r.fitted_exponent.into(),
            r.fitted_constant.into(),
            r.identically_zero.into(),
            r.final_ratio.into(),
            r.density_prediction.into(),
            r.benchmark_exponent.into(),
        ]);
    }
    Ok(Outcome::plain(t))
}
