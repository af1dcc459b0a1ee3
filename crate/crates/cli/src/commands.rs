//! Subcommand implementations. Each returns a [`Table`]; per-row failures are
//! recorded in the status column and in `Table::errors`.

use std::f64::consts::PI;

use lifshitz::bodies::{casimir_polder_energy, order_n_interaction, BodyAssembly};
use lifshitz::kernels::{a_fourier, a_real, g_real, k0_inv_fourier, KernelTensor};
use lifshitz::planar::{
    lifshitz_exact_per_area, matsubara_free_energy_per_area, perturbative_orders, PlanarSystem, SeriesResult,
    SeriesScheme,
};
use lifshitz::roughsurf::{energy_flat_reference, energy_second_order_detailed, HeightProfile, RoughPair};
use lifshitz::{plasma_wavelength, DielectricModel, Error, QuadratureConfig, Result};
use rayon::prelude::*;

use crate::output::{status_of, Cell, Table};

pub struct Context {
    pub model1: DielectricModel<f64>,
    pub model2: DielectricModel<f64>,
    pub scheme: SeriesScheme,
    pub max_order: usize,
    pub cfg: QuadratureConfig<f64>,
    pub ratio_only: bool,
}

fn lp() -> f64 {
    plasma_wavelength()
}

fn record<T>(table: &mut Table, row: usize, r: &Result<T>) {
    if let Err(e) = r {
        eprintln!("row {row}: {e}");
        table.errors.push((row, e.clone()));
    }
}

fn planar(ctx: &Context, h_over_lp: f64) -> Result<PlanarSystem<f64>> {
    PlanarSystem::new(ctx.model1, ctx.model2, h_over_lp * lp())
}

pub fn exact(ctx: &Context, hs: &[f64]) -> Table {
    let mut table = Table::new(vec!["H_over_lambda_p".into(), "exact".into(), "status".into()]);
    let results: Vec<Result<f64>> =
        hs.par_iter().map(|&h| lifshitz_exact_per_area(&planar(ctx, h)?, &ctx.cfg)).collect();
    for (k, (&h, r)) in hs.iter().zip(&results).enumerate() {
        record(&mut table, k, r);
        table.push(vec![h.into(), r.as_ref().ok().copied().into(), status_of(r.as_ref().err()).into()]);
    }
    table
}

fn series_columns(ctx: &Context) -> Vec<String> {
    let n = ctx.max_order;
    let evens = (2..=n).step_by(2);
    let mut cols = vec!["H_over_lambda_p".to_string()];
    if !ctx.ratio_only {
        cols.push("exact".into());
        cols.extend((2..=n).map(|k| format!("E{k}")));
        cols.extend(evens.clone().map(|k| format!("S{k}")));
    }
    cols.extend(evens.map(|k| format!("ratio{k}")));
    cols.push("verdict".into());
    cols.push("status".into());
    cols
}

fn series_row(ctx: &Context, h: f64, r: &Result<SeriesResult<f64>>) -> Vec<Cell> {
    let n = ctx.max_order;
    let evens: Vec<usize> = (2..=n).step_by(2).collect();
    let mut row: Vec<Cell> = vec![h.into()];
    match r {
        Ok(res) => {
            let sum = |k: usize| if res.sum_valid[k] { Cell::Num(res.partial_sums[k]) } else { Cell::Missing };
            if !ctx.ratio_only {
                row.push(res.exact.into());
                row.extend((2..=n).map(|k| if res.order_valid[k] { Cell::Num(res.per_order[k]) } else { Cell::Missing }));
                row.extend(evens.iter().map(|&k| sum(k)));
            }
            row.extend(evens.iter().map(|&k| if res.sum_valid[k] { Cell::Num(res.ratios[k]) } else { Cell::Missing }));
            row.push(res.verdict.map_or(Cell::Missing, |v| v.to_string().into()));
            let status = if res.all_valid() { "ok" } else { "nonconvergence" };
            row.push(status.into());
        }
        Err(e) => {
            let width = series_columns(ctx).len();
            row.resize(width - 1, Cell::Missing);
            row.push(status_of(Some(e)).into());
        }
    }
    row
}

pub fn series(ctx: &Context, hs: &[f64]) -> Table {
    let mut table = Table::new(series_columns(ctx));
    let results: Vec<Result<SeriesResult<f64>>> = hs
        .par_iter()
        .map(|&h| perturbative_orders(&planar(ctx, h)?, ctx.scheme, ctx.max_order, &ctx.cfg))
        .collect();
    for (k, (&h, r)) in hs.iter().zip(&results).enumerate() {
        record(&mut table, k, r);
        if let Ok(res) = r {
            if !res.all_valid() {
                let e = Error::NonConvergence { estimate: f64::NAN, error: f64::NAN, evaluations: 0 };
                eprintln!("row {k}: some orders did not converge");
                table.errors.push((k, e));
            }
        }
        table.push(series_row(ctx, h, r));
    }
    table
}

pub fn sweep_points(h_min: f64, h_max: f64, points: usize, linear: bool) -> Result<Vec<f64>> {
    if !(h_min > 0.0 && h_max > h_min && h_max.is_finite()) || points < 2 {
        return Err(Error::Domain("sweep needs 0 < h_min < h_max and at least 2 points".into()));
    }
    let last = (points - 1) as f64;
    Ok((0..points)
        .map(|k| {
            let t = k as f64 / last;
            if linear {
                h_min + t * (h_max - h_min)
            } else {
                h_min * (h_max / h_min).powf(t)
            }
        })
        .collect())
}

pub fn cp(ctx: &Context, alpha1: f64, alpha2: f64, rs: &[f64]) -> Table {
    let mut cols = vec!["alpha1", "alpha2", "R"];
    if !ctx.ratio_only {
        cols.extend(["energy", "reference"]);
    }
    cols.extend(["ratio", "status"]);
    let mut table = Table::new(cols.into_iter().map(String::from).collect());
    for (k, &r) in rs.iter().enumerate() {
        let reference = -23.0 / (4.0 * PI) * alpha1 * alpha2 / r.powi(7);
        let e = casimir_polder_energy(|_| alpha1, |_| alpha2, r, &ctx.cfg);
        record(&mut table, k, &e);
        let value = e.as_ref().ok().copied();
        let mut row: Vec<Cell> = vec![alpha1.into(), alpha2.into(), r.into()];
        if !ctx.ratio_only {
            row.push(value.into());
            row.push(reference.into());
        }
        row.push(value.map(|v| v / reference).into());
        row.push(status_of(e.as_ref().err()).into());
        table.push(row);
    }
    table
}

pub fn bodies(ctx: &Context, assembly: &BodyAssembly<f64>, orders: &[usize]) -> Table {
    let mut table = Table::new(vec!["order".into(), "energy".into(), "status".into()]);
    table.meta("bodies", assembly.bodies().len());
    table.meta("resolution", assembly.resolution());
    for (k, &n) in orders.iter().enumerate() {
        let e = order_n_interaction(assembly, n, &ctx.cfg);
        record(&mut table, k, &e);
        table.push(vec![n.into(), e.as_ref().ok().copied().into(), status_of(e.as_ref().err()).into()]);
    }
    table
}

/// Parses `flat[:offset=x]`, `sin:amplitude=a,(kx=..,ky=..|nx=..,ny=..),phase=p`
/// or `grid:<path>`; mode numbers nx, ny are relative to the cell side.
pub fn parse_profile(spec: &str, side: f64) -> Result<HeightProfile<f64>> {
    let (kind, params) = spec.split_once(':').unwrap_or((spec, ""));
    if kind.trim() == "grid" {
        let text = std::fs::read_to_string(params.trim())
            .map_err(|e| Error::Input(format!("cannot read grid file '{}': {e}", params.trim())))?;
        return HeightProfile::parse_grid_csv(&text);
    }
    let mut get = std::collections::BTreeMap::new();
    for kv in params.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = kv.split_once('=').ok_or_else(|| Error::Input(format!("expected key=value, got '{kv}'")))?;
        let v: f64 = v.trim().parse().map_err(|_| Error::Input(format!("cannot parse number '{v}'")))?;
        get.insert(k.trim().to_string(), v);
    }
    let take = |get: &mut std::collections::BTreeMap<String, f64>, k: &str| get.remove(k).unwrap_or(0.0);
    let profile = match kind.trim() {
        "flat" => HeightProfile::Flat { offset: take(&mut get, "offset") },
        "sin" | "sinusoid" => {
            let amplitude = take(&mut get, "amplitude");
            let phase = take(&mut get, "phase");
            let k0 = 2.0 * PI / side;
            let kx = take(&mut get, "kx") + k0 * take(&mut get, "nx");
            let ky = take(&mut get, "ky") + k0 * take(&mut get, "ny");
            HeightProfile::Sinusoid { amplitude, wavevector: [kx, ky], phase }
        }
        other => return Err(Error::Input(format!("unknown profile kind '{other}'"))),
    };
    if let Some(k) = get.keys().next() {
        return Err(Error::Input(format!("unknown profile parameter '{k}'")));
    }
    Ok(profile)
}

pub struct RoughArgs {
    pub separation: f64,
    pub side: f64,
    pub samples: usize,
    pub h1: HeightProfile<f64>,
    pub h2: HeightProfile<f64>,
}

pub fn rough(ctx: &Context, args: &RoughArgs) -> Table {
    let mut cols = vec!["H", "cell_side", "samples"];
    cols.extend(["energy", "local", "correction", "tail_bound", "rings", "status"]);
    let mut table = Table::new(cols.into_iter().map(String::from).collect());
    let result = RoughPair::new(ctx.model1, ctx.model2, args.separation, args.h1.clone(), args.h2.clone(), args.side, args.samples)
        .and_then(|pair| energy_second_order_detailed(&pair, &ctx.cfg).map(|e| (pair, e)));
    record(&mut table, 0, &result);
    let mut row: Vec<Cell> = vec![args.separation.into()];
    match &result {
        Ok((pair, e)) => {
            row.extend([pair.cell_side.into(), pair.samples.into()]);
            row.extend([e.energy.into(), e.local.into(), e.correction.into(), e.tail_bound.into(), e.rings.into()]);
        }
        Err(_) => row.extend((0..7).map(|_| Cell::Missing)),
    }
    row.push(status_of(result.as_ref().err()).into());
    table.push(row);
    table
}

/// Flat-limit consistency: h₁ = h₂ = 0 against cell area × ℰ₂(H).
pub fn rough_flat(ctx: &Context, separation: f64, side: f64, samples: usize) -> Table {
    let mut table = Table::new(
        ["H", "cell_side", "samples", "energy", "reference", "rel_diff", "status"].map(String::from).to_vec(),
    );
    let result = RoughPair::new(ctx.model1, ctx.model2, separation, HeightProfile::flat(), HeightProfile::flat(), side, samples)
        .and_then(|pair| energy_second_order_detailed(&pair, &ctx.cfg))
        .and_then(|e| {
            let reference = side * side * energy_flat_reference(&ctx.model1, &ctx.model2, separation, &ctx.cfg)?;
            Ok((e.energy, reference))
        });
    record(&mut table, 0, &result);
    let mut row: Vec<Cell> = vec![separation.into(), side.into(), samples.into()];
    match &result {
        Ok((e, r)) => row.extend([(*e).into(), (*r).into(), ((e - r).abs() / r.abs()).into()]),
        Err(_) => row.extend((0..3).map(|_| Cell::Missing)),
    }
    row.push(status_of(result.as_ref().err()).into());
    table.push(row);
    table
}

pub fn matsubara(ctx: &Context, h_over_lp: f64, temps: &[f64], s_max: usize) -> Table {
    let mut cols = vec!["kT", "H_over_lambda_p"];
    if !ctx.ratio_only {
        cols.extend(["free_energy", "exact"]);
    }
    cols.extend(["ratio", "terms", "status"]);
    let mut table = Table::new(cols.into_iter().map(String::from).collect());
    let exact = planar(ctx, h_over_lp).and_then(|s| lifshitz_exact_per_area(&s, &ctx.cfg));
    let results: Vec<Result<(f64, usize)>> = temps
        .par_iter()
        .map(|&t| {
            let sys = planar(ctx, h_over_lp)?;
            let f = matsubara_free_energy_per_area(&sys, t, s_max, &ctx.cfg)?;
            Ok((f.free_energy, f.terms))
        })
        .collect();
    for (k, (&t, r)) in temps.iter().zip(results).enumerate() {
        let r = r.and_then(|v| exact.clone().map(|e| (v, e)));
        record(&mut table, k, &r);
        let mut row: Vec<Cell> = vec![t.into(), h_over_lp.into()];
        match &r {
            Ok(((f, terms), e)) => {
                if !ctx.ratio_only {
                    row.extend([(*f).into(), (*e).into()]);
                }
                row.extend([(f / e).into(), (*terms).into()]);
            }
            Err(_) => row.extend((0..if ctx.ratio_only { 2 } else { 4 }).map(|_| Cell::Missing)),
        }
        row.push(status_of(r.as_ref().err()).into());
        table.push(row);
    }
    table
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum KernelKind {
    /// A(ζ, r) in position space
    A,
    /// G(ζ, r) in position space, with its contact-term coefficient
    G,
    /// A(ζ, q) in Fourier space
    Aq,
    /// K₀⁻¹(ζ, q) in Fourier space
    K0inv,
}

pub fn kernels(kind: KernelKind, zetas: &[f64], v: [f64; 3]) -> Table {
    let mut table = Table::new(
        ["kernel", "zeta", "v1", "v2", "v3", "i", "j", "value", "delta_coeff", "status"].map(String::from).to_vec(),
    );
    let name = format!("{kind:?}").to_lowercase();
    for (k, &z) in zetas.iter().enumerate() {
        let r: Result<KernelTensor<f64>> = match kind {
            KernelKind::A => a_real(z, v),
            KernelKind::G => g_real(z, v),
            KernelKind::Aq => a_fourier(z, v),
            KernelKind::K0inv => k0_inv_fourier(z, v),
        };
        record(&mut table, k, &r);
        for i in 0..3 {
            for j in 0..3 {
                let mut row: Vec<Cell> = vec![name.as_str().into(), z.into(), v[0].into(), v[1].into(), v[2].into()];
                row.extend([Cell::Int(i as i64), Cell::Int(j as i64)]);
                match &r {
                    Ok(t) => row.extend([t.m[i][j].into(), t.delta_coeff.into()]),
                    Err(_) => row.extend([Cell::Missing, Cell::Missing]),
                }
                row.push(status_of(r.as_ref().err()).into());
                table.push(row);
            }
        }
    }
    table
}
