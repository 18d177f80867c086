//! Subcommand implementations.

use std::path::Path;

use rank1ks_core::convolution::{self, BiInvariantTriple};
use rank1ks_core::geometry::{self, make_space};
use rank1ks_core::kernel::{self, RadialFunction};
use rank1ks_core::maximal::{self, BallSpec, FieldGrid, GridModel, SeparationConfig, ShellsConfig, StencilTable};
use rank1ks_core::par::child_seed;
use rank1ks_core::rearrange::{decreasing_rearrangement, WeightedSamples};
use rank1ks_core::{pinned, IwasawaPoint, SpaceParams};

use crate::cli::{Cli, Command, Family, Range};
use crate::config::RunConfig;
use crate::output::{emit_tables, write_json, Summary, Table};
use crate::suites::{number, run_suite, run_suites, Suite, SuiteResult};
use crate::{row, CliError, Status};

/// Runs the parsed command line.
pub fn run(cli: &Cli) -> Result<Status, CliError> {
    let mut cfg = RunConfig::load(cli.global.config.as_deref())?;
    if let Some(seed) = cli.global.seed {
        cfg.seed = seed;
    }
    if let Some(m1) = cli.global.m1 {
        cfg.m1 = m1;
    }
    if let Some(m2) = cli.global.m2 {
        cfg.m2 = m2;
    }
    execute(&cli.command, cfg, cli.global.out.as_deref())
}

/// Runs `command` under an already merged configuration.
pub fn execute(command: &Command, mut cfg: RunConfig, out: Option<&Path>) -> Result<Status, CliError> {
    let space = |cfg: &RunConfig| make_space(cfg.m1, cfg.m2).map_err(CliError::from);
    match command {
        Command::SpaceInfo { t_max, step } => space_info(&space(&cfg)?, *t_max, *step, out),
        Command::KernelTable { t, s, step } => {
            let k = &mut cfg.kernel_table;
            if let Some(Range(a, b)) = *t {
                (k.t_min, k.t_max) = (a, b);
            }
            if let Some(Range(a, b)) = *s {
                (k.s_min, k.s_max) = (a, b);
            }
            if let Some(step) = *step {
                k.step = step;
            }
            kernel_table(&space(&cfg)?, &cfg, out)
        }
        Command::Abel { intervals, s, n_s } => {
            let a = &mut cfg.abel;
            if let Some(iv) = intervals {
                a.intervals.clone_from(&iv.0);
            }
            if let Some(Range(lo, hi)) = *s {
                (a.s_min, a.s_max) = (lo, hi);
            }
            if let Some(n) = *n_s {
                a.n_s = n;
            }
            abel(&space(&cfg)?, &cfg, out)
        }
        Command::LorentzNorm { values, weights, p, q } => {
            let l = &mut cfg.lorentz;
            if let Some(v) = values {
                l.values.clone_from(v);
                if weights.is_none() {
                    l.weights = vec![1.0; v.len()];
                }
            }
            if let Some(w) = weights {
                l.weights.clone_from(w);
            }
            if let Some(p) = *p {
                l.p = p;
            }
            if let Some(q) = *q {
                l.q = q;
            }
            lorentz(&cfg, out)
        }
        Command::RearrangeCheck { cases } => {
            if let Some(n) = *cases {
                cfg.verify.rearrange_cases = n;
            }
            suite_command(Suite::Rearrange, &cfg, out)
        }
        Command::Trilinear { r_f, r_g, r_h, samples } => {
            let t = &mut cfg.trilinear;
            for (slot, v) in [(&mut t.r_f, r_f), (&mut t.r_g, r_g), (&mut t.r_h, r_h)] {
                if let Some(v) = *v {
                    *slot = v;
                }
            }
            if let Some(n) = *samples {
                t.samples = n;
            }
            trilinear(&space(&cfg)?, &cfg, out)
        }
        Command::ChainVerify { models } => {
            if let Some(n) = *models {
                cfg.verify.chain_models = n;
            }
            suite_command(Suite::Chain, &cfg, out)
        }
        Command::Theorem8 { models } => {
            if let Some(n) = *models {
                cfg.verify.theorem8_models = n;
            }
            suite_command(Suite::Theorem8, &cfg, out)
        }
        Command::MaximalRun {
            v_half,
            s_half,
            n_v,
            n_s,
            r_min,
            r_max,
            fields,
        } => {
            let m = &mut cfg.maximal;
            for (slot, v) in [
                (&mut m.v_half, v_half),
                (&mut m.s_half, s_half),
                (&mut m.r_min, r_min),
                (&mut m.r_max, r_max),
            ] {
                if let Some(v) = *v {
                    *slot = v;
                }
            }
            for (slot, v) in [(&mut m.n_v, n_v), (&mut m.n_s, n_s), (&mut m.fields, fields)] {
                if let Some(v) = *v {
                    *slot = v;
                }
            }
            maximal_run(&space(&cfg)?, &cfg, out)
        }
        Command::WeakType {
            family,
            counts,
            max_shells,
        } => {
            let w = &mut cfg.weak_type;
            if let Some(f) = family {
                w.family = match f {
                    Family::Separation => "separation",
                    Family::Shells => "shells",
                }
                .to_owned();
            }
            if let Some(c) = counts {
                w.counts.clone_from(c);
            }
            if let Some(n) = *max_shells {
                w.max_shells = n;
            }
            weak_type(&space(&cfg)?, &cfg, out)
        }
        Command::Covering { families } => {
            if let Some(n) = *families {
                cfg.verify.covering_families = n;
            }
            suite_command(Suite::Covering, &cfg, out)
        }
        Command::Verify { suite } => {
            let mut which: Vec<Suite> = Vec::new();
            for s in suite.iter().flat_map(|s| s.suites()) {
                if !which.contains(&s) {
                    which.push(s);
                }
            }
            verify(&which, &cfg, out)
        }
        Command::Report { dir } => {
            let dir = dir
                .as_deref()
                .or(out)
                .ok_or_else(|| CliError::Config("report needs --dir or --out".into()))?;
            report(dir)
        }
    }
}

fn grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>, CliError> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(CliError::Config(format!("step must be positive, got {step}")));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| lo + step * k as f64).collect())
}

fn space_info(sp: &SpaceParams, t_max: f64, step: f64, out: Option<&Path>) -> Result<Status, CliError> {
    println!("m1 = {}", sp.m1());
    println!("m2 = {}", sp.m2());
    println!("rho = {:?}", sp.rho());
    println!("dimension = {}", sp.dim());
    if out.is_none() {
        println!();
    }
    let mut t = Table::new("space_info", &["t", "radial_density", "ball_volume"]);
    for r in grid(0.0, t_max, step)? {
        t.push(row![r, geometry::radial_density(sp, r), geometry::ball_volume(sp, r)]);
    }
    emit_tables(out, "", &[t])?;
    Ok(Status::Pass)
}

fn kernel_table(sp: &SpaceParams, cfg: &RunConfig, out: Option<&Path>) -> Result<Status, CliError> {
    let k = &cfg.kernel_table;
    let c = pinned::KERNEL_C_STAR;
    let mut t = Table::new(
        "kernel_table",
        &["t", "s", "psi", "comparator", "ratio", "within_pinned"],
    );
    let mut pass = true;
    for s in grid(k.s_min, k.s_max, k.step)? {
        for tt in grid(k.t_min, k.t_max, k.step)? {
            if tt < s.abs() + k.band {
                continue;
            }
            let psi = kernel::psi_with_tol(sp, tt, s, k.rel_tol);
            let comp = kernel::psi_comparator(sp, tt, s)?;
            let ratio = psi / comp;
            let within = ratio >= 1.0 / c && ratio <= c;
            pass &= within;
            t.push(row![tt, s, psi, comp, ratio, within]);
        }
    }
    if t.is_empty() {
        return Err(CliError::Config(
            "the t and s ranges leave no point with t >= |s| + band".into(),
        ));
    }
    emit_tables(out, "", &[t])?;
    Ok(Status::from_pass(pass))
}

fn abel(sp: &SpaceParams, cfg: &RunConfig, out: Option<&Path>) -> Result<Status, CliError> {
    let a = &cfg.abel;
    let f = RadialFunction::union_of(&a.intervals)?;
    let mut t = Table::new("abel", &["s", "abel"]);
    let n = a.n_s.max(1);
    for j in 0..=n {
        let s = a.s_min + (a.s_max - a.s_min) * j as f64 / n as f64;
        t.push(row![s, kernel::abel_transform(sp, &f, s)]);
    }
    let (sup, norm) = kernel::abel_l21_bound(sp, &f, 200)?;
    let ratio = if norm > 0.0 { sup / norm } else { 0.0 };
    let pin = pinned::abel_l21_constant(sp);
    let mut b = Table::new("abel_bound", &["sup_abel", "norm", "ratio", "pinned_constant"]);
    b.push(row![sup, norm, ratio, pin.unwrap_or(f64::NAN)]);
    emit_tables(out, "", &[t, b])?;
    Ok(Status::from_pass(pin.map_or(true, |c| ratio <= c)))
}

fn lorentz(cfg: &RunConfig, out: Option<&Path>) -> Result<Status, CliError> {
    let l = &cfg.lorentz;
    if l.values.len() != l.weights.len() {
        return Err(CliError::Config(format!(
            "{} values but {} weights",
            l.values.len(),
            l.weights.len()
        )));
    }
    let samples = WeightedSamples::new(l.values.iter().copied().zip(l.weights.iter().copied()).collect())?;
    let norm = decreasing_rearrangement(&samples).lorentz_norm(l.p, l.q)?;
    let mut t = Table::new("lorentz_norm", &["p", "q", "norm"]);
    t.push(row![l.p, l.q, norm]);
    emit_tables(out, "", &[t])?;
    Ok(Status::Pass)
}

fn trilinear(sp: &SpaceParams, cfg: &RunConfig, out: Option<&Path>) -> Result<Status, CliError> {
    let c = &cfg.trilinear;
    let triple = BiInvariantTriple {
        f: RadialFunction::ball(c.r_f)?,
        g: RadialFunction::ball(c.r_g)?,
        h: RadialFunction::ball(c.r_h)?,
    };
    let est = convolution::trilinear_mc(sp, &triple, None, c.samples, cfg.seed)?;
    let nf = convolution::radial_l21_norm(sp, &triple.f)?;
    let ng = convolution::radial_l21_norm(sp, &triple.g)?;
    let nh = convolution::radial_l21_norm(sp, &triple.h)?;
    let mut t = Table::new(
        "trilinear",
        &[
            "r_f", "r_g", "r_h", "samples", "estimate", "stderr", "l21_f", "l21_g", "l21_h", "ratio",
        ],
    );
    t.push(row![
        c.r_f,
        c.r_g,
        c.r_h,
        c.samples,
        est.estimate,
        est.stderr,
        nf,
        ng,
        nh,
        est.estimate / (nf * ng * nh)
    ]);
    emit_tables(out, "", &[t])?;
    Ok(Status::Pass)
}

fn maximal_run(sp: &SpaceParams, cfg: &RunConfig, out: Option<&Path>) -> Result<Status, CliError> {
    let m = &cfg.maximal;
    let model = GridModel::new(sp, m.v_half, m.s_half, m.n_v, m.n_s)?;
    let radii = maximal::quarter_octave_radii(m.r_min, m.r_max);
    let table = StencilTable::new(&model, &radii)?;
    let us = maximal::default_u_list(&model);
    let c3 = pinned::c3(sp);
    let unit = BallSpec::new(&model, IwasawaPoint::on_axis(sp, 0.0), 1.0)?;
    let mut fields = vec![FieldGrid::indicator_of_balls(model.clone(), &[unit])?];
    for i in 0..m.fields {
        let seed = child_seed(cfg.seed, i as u64);
        fields.push(maximal::random_multi_ball_indicator(
            &model,
            1 + i % 6,
            (0.2, 1.0),
            m.r_max,
            seed,
        )?);
    }
    let mut t = Table::new(
        "maximal_run",
        &[
            "field",
            "max_ratio",
            "bound",
            "interior_cells",
            "flagged",
            "resolved",
            "m1_above_m2_cells",
        ],
    );
    let mut pass = true;
    for (i, f) in fields.iter().enumerate() {
        let rep = maximal::pointwise_domination_check(f, &table, &us)?;
        let (a, b) = (maximal::m1_field(f, &table), maximal::m2_field(f, &table));
        let violations = a
            .iter()
            .zip(&b)
            .filter(|(x, y)| matches!(x, Some(x) if !matches!(y, Some(y) if x <= y)))
            .count();
        pass &= rep.flagged == 0 && violations == 0 && c3.map_or(true, |c| rep.max_ratio <= c);
        t.push(row![
            i,
            rep.max_ratio,
            rep.bound,
            rep.interior_cells,
            rep.flagged,
            rep.resolved,
            violations
        ]);
    }
    emit_tables(out, "", &[t])?;
    Ok(Status::from_pass(pass))
}

fn weak_type(sp: &SpaceParams, cfg: &RunConfig, out: Option<&Path>) -> Result<Status, CliError> {
    let w = &cfg.weak_type;
    let (rows, asserted) = match w.family.as_str() {
        "separation" => {
            let sep = SeparationConfig {
                counts: w.counts.clone(),
                min_distance: w.min_distance,
                r_max: w.r_max,
                dv: w.dv,
                n_s: w.n_s,
            };
            (maximal::separation_sweep(sp, &sep)?, true)
        }
        "shells" => (
            maximal::shells_probe(
                sp,
                &ShellsConfig {
                    max_shells: w.max_shells,
                    ..ShellsConfig::default()
                },
            )?,
            false,
        ),
        other => return Err(CliError::Config(format!("unknown weak-type family `{other}`"))),
    };
    let mut t = Table::new(
        "weak_type",
        &["instance", "weak_norm", "l21_norm", "l2_norm", "ratio", "ratio_l2"],
    );
    for r in &rows {
        t.push(row![
            r.instance,
            r.weak_norm,
            r.l21_norm,
            r.l2_norm,
            r.ratio,
            r.ratio_l2
        ]);
    }
    emit_tables(out, "", &[t])?;
    let base = rows.first().map_or(1.0, |r| r.ratio);
    let f = pinned::SEPARATION_FACTOR;
    Ok(Status::from_pass(
        !asserted || rows.iter().all(|r| r.ratio <= f * base && r.ratio * f >= base),
    ))
}

fn emit_result(r: &SuiteResult, out: Option<&Path>) -> Result<(), CliError> {
    if let Some(dir) = out {
        emit_tables(Some(dir), "", &r.tables)?;
        write_json(&dir.join(format!("{}_summary.json", r.suite.name())), &r.summary)?;
    }
    Ok(())
}

fn suite_command(s: Suite, cfg: &RunConfig, out: Option<&Path>) -> Result<Status, CliError> {
    let r = run_suite(s, cfg)?;
    match out {
        Some(_) => {
            emit_result(&r, out)?;
            println!("{}", r.status_line());
        }
        None => {
            emit_tables(None, "", &r.tables)?;
            eprintln!("{}", r.status_line());
        }
    }
    Ok(Status::from_pass(r.summary.pass))
}

fn verify(which: &[Suite], cfg: &RunConfig, out: Option<&Path>) -> Result<Status, CliError> {
    let mut timer = std::time::Instant::now();
    let results = run_suites(which, cfg, |r| {
        println!("{}", r.status_line());
        eprintln!("  {} took {:.1?}", r.suite.name(), timer.elapsed());
        timer = std::time::Instant::now();
    })?;
    if let Some(dir) = out {
        for r in &results {
            emit_result(r, out)?;
        }
        let all: Vec<&Summary> = results.iter().map(|r| &r.summary).collect();
        write_json(&dir.join("summary.json"), &all)?;
    }
    Ok(Status::from_pass(results.iter().all(|r| r.summary.pass)))
}

fn report(dir: &Path) -> Result<Status, CliError> {
    let path = dir.join("summary.json");
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    let all: Vec<Summary> =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    println!("| criterion | suite | cases | measured | pinned | result |");
    println!("|---|---|---|---|---|---|");
    for s in &all {
        let criterion = Suite::ALL
            .iter()
            .find(|x| x.name() == s.suite)
            .map_or("?".to_owned(), |x| x.criterion().to_string());
        println!(
            "| {criterion} | {} | {} | {} | {} | {} |",
            s.suite,
            s.cases,
            number(s.max_ratio),
            number(s.pinned_constant),
            if s.pass { "pass" } else { "FAIL" }
        );
    }
    let passed = all.iter().filter(|s| s.pass).count();
    println!("\n{passed} of {} suites pass", all.len());
    Ok(Status::from_pass(passed == all.len()))
}
