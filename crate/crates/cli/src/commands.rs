use mosum::arl::{arl_cda, glaz_arl_grid, glaz_bcp, passage_cdf, GLAZ_GROUPS};
use mosum::bcp::{approximate, diffusion_bcp};
use mosum::calibrate::{calibrate_cda, CalibrationTarget};
use mosum::mc::{
    simulate_bcp, simulate_passage, simulate_passage_grid, simulate_window_maxima, McConfig,
};
use mosum::model::{h_from_threshold, threshold_from_h};
use mosum::normal::sf;
use mosum::short::{durbin, pch};
use mosum::{BcpMethod, ProcessSpec};
use serde_json::{json, Value};

use crate::output::{Cell, Table};
use crate::{BcpArgs, CalibrateArgs, CurvesArgs, Failure, Process, Run, TableArgs, Which};

type Outcome = Result<(), Failure>;

const LEVELS: [f64; 4] = [0.05, 0.10, 0.15, 0.20];
const TABLE1_SHAPES: [(usize, usize); 4] = [(5, 5), (10, 5), (100, 100), (200, 100)];
const TABLE2_SHAPES: [(usize, usize); 4] = [(10, 50), (10, 500), (50, 250), (50, 2500)];
const TABLE3_WINDOWS: [usize; 2] = [10, 50];
const TABLE3_THRESHOLDS: [f64; 9] = [1.0, 1.25, 1.5, 1.75, 2.0, 2.25, 2.5, 2.75, 3.0];

fn manifest(command: &str, parameters: Value) -> Value {
    json!({
        "command": command,
        "parameters": parameters,
        "version": env!("CARGO_PKG_VERSION"),
    })
}

fn run_parameters(run: &Run) -> Value {
    json!({
        "seed": run.seed,
        "replications": run.replications,
        "format": format!("{:?}", run.format).to_lowercase(),
        "out": run.out.as_ref().map(|p| p.display().to_string()),
    })
}

fn merge(mut a: Value, b: Value) -> Value {
    if let (Value::Object(a), Value::Object(b)) = (&mut a, b) {
        a.extend(b);
    }
    a
}

fn mc_config(run: &Run) -> McConfig {
    let cfg = McConfig::new(run.replications, run.seed);
    match run.threads {
        Some(t) => cfg.with_threads(t),
        None => cfg,
    }
}

fn spec_of(p: &Process) -> Result<ProcessSpec, Failure> {
    Ok(ProcessSpec::new(p.window, p.mu, p.sigma)?)
}

fn method_names(methods: &[BcpMethod]) -> Vec<&'static str> {
    methods.iter().map(|m| m.name()).collect()
}

/// Durbin's value leaves [0, 1] for small thresholds; only the printed copy is clamped.
fn shown(method: BcpMethod, value: f64) -> f64 {
    if method == BcpMethod::Durbin {
        value.clamp(0.0, 1.0)
    } else {
        value
    }
}

fn check_glaz(methods: &[BcpMethod], m: usize, l: usize) -> Outcome {
    if methods.contains(&BcpMethod::Glaz) && m < 2 * l {
        return Err(Failure::Library(mosum::Error::Domain(format!(
            "glaz requires M >= 2L (M = {m}, L = {l})"
        ))));
    }
    Ok(())
}

pub fn bcp(a: BcpArgs) -> Outcome {
    let spec = spec_of(&a.process)?;
    let (m, l) = (a.horizon, spec.window);
    if m == 0 {
        return Err(Failure::Input("M must be at least 1".into()));
    }
    if a.methods.is_empty() {
        return Err(Failure::Input("no methods given".into()));
    }
    check_glaz(&a.methods, m, l)?;
    let threshold = match (a.h, a.raw) {
        (Some(h), _) => threshold_from_h(h, &spec),
        (None, Some(raw)) => h_from_threshold(raw, &spec),
        (None, None) => return Err(Failure::Input("give a threshold with --h or --H".into())),
    };
    let h = threshold.h;
    let cfg = mc_config(&a.run);
    let params = json!({
        "L": l, "M": m, "h": h, "H": threshold.raw, "mu": spec.mu, "sigma": spec.sigma,
        "methods": method_names(&a.methods),
    });
    let mut table = Table::new(
        manifest("bcp", merge(params, run_parameters(&a.run))),
        vec!["method", "value", "stderr"],
    );
    for &method in &a.methods {
        let (value, stderr) = match method {
            BcpMethod::Mc => {
                let r = simulate_bcp(&spec, m, h, &cfg)?;
                (r.estimate, Some(r.stderr))
            }
            BcpMethod::Glaz => {
                let r = glaz_bcp(h, m, l, &cfg)?;
                (r.value, r.stderr)
            }
            _ => (approximate(method, h, m, l)?.value, None),
        };
        table.push(vec![
            method.name().into(),
            shown(method, value).into(),
            Cell::opt(stderr),
        ]);
    }
    Ok(table.emit(a.run.format, a.run.out.as_deref())?)
}

pub fn table(a: TableArgs) -> Outcome {
    let name = format!("{:?}", a.which).to_lowercase();
    let params = merge(json!({ "table": name }), run_parameters(&a.run));
    let cfg = mc_config(&a.run);
    let table = match a.which {
        Which::Table1 => probability_table(manifest("table", params), &TABLE1_SHAPES, &cfg)?,
        Which::Table2 => probability_table(manifest("table", params), &TABLE2_SHAPES, &cfg)?,
        Which::Table3 => run_length_table(manifest("table", params), &cfg)?,
    };
    Ok(table.emit(a.run.format, a.run.out.as_deref())?)
}

/// For each level, the threshold at which the simulated crossing frequency
/// equals the level, against the threshold the corrected diffusion
/// approximation needs for the same level.
fn probability_table(
    manifest: Value,
    shapes: &[(usize, usize)],
    cfg: &McConfig,
) -> Result<Table, Failure> {
    let mut table = Table::new(
        manifest,
        vec![
            "L",
            "M",
            "level",
            "h_mc",
            "h_cda",
            "threshold_rel_err",
            "cda_at_h_mc",
            "probability_rel_err",
        ],
    );
    for &(l, m) in shapes {
        let spec = ProcessSpec::standard(l)?;
        let mut maxima = simulate_window_maxima(&spec, m, cfg)?;
        maxima.sort_by(|a, b| b.total_cmp(a));
        for level in LEVELS {
            let k = (level * maxima.len() as f64).round() as usize;
            if k == 0 {
                return Err(Failure::Input(format!(
                    "{} replications cannot resolve the level {level}",
                    maxima.len()
                )));
            }
            // Any h in (maxima[k], maxima[k-1]] gives frequency k/n; take the top.
            let h_mc = maxima[k - 1];
            let h_cda = calibrate_cda(
                CalibrationTarget::Bcp {
                    p: level,
                    horizon: m,
                },
                &spec,
            )?
            .threshold
            .h;
            let at_mc = approximate(BcpMethod::Cda, h_mc, m, l)?.value;
            table.push(vec![
                l.into(),
                m.into(),
                level.into(),
                h_mc.into(),
                h_cda.into(),
                ((h_cda - h_mc) / h_mc).into(),
                at_mc.into(),
                ((at_mc - level) / level).into(),
            ]);
        }
    }
    Ok(table)
}

fn run_length_table(manifest: Value, cfg: &McConfig) -> Result<Table, Failure> {
    let mut table = Table::new(
        manifest,
        vec!["L", "h", "method", "value", "stderr", "half_width"],
    );
    for l in TABLE3_WINDOWS {
        for h in TABLE3_THRESHOLDS {
            let v = arl_cda(h, l)?.value;
            table.push(vec![
                l.into(),
                h.into(),
                "cda".into(),
                v.into(),
                Cell::Empty,
                Cell::Empty,
            ]);
        }
        let spec = ProcessSpec::standard(l)?;
        for s in simulate_passage_grid(&spec, &TABLE3_THRESHOLDS, cfg)? {
            if let Some(w) = &s.warning {
                eprintln!("warning: L = {l}, h = {}: {w}", s.h);
            }
            let hw = 1.96 * s.stderr;
            table.push(vec![
                l.into(),
                s.h.into(),
                "mc".into(),
                s.mean.into(),
                s.stderr.into(),
                hw.into(),
            ]);
        }
        for (g, h) in glaz_arl_grid(&TABLE3_THRESHOLDS, l, cfg, GLAZ_GROUPS)?
            .into_iter()
            .zip(TABLE3_THRESHOLDS)
        {
            table.push(vec![
                l.into(),
                h.into(),
                "glaz".into(),
                g.estimate.value.into(),
                Cell::opt(g.estimate.stderr),
                g.half_width.into(),
            ]);
        }
    }
    Ok(table)
}

/// `lo:hi:step` or a comma-separated list; finite and ascending.
fn parse_grid(text: &str) -> Result<Vec<f64>, Failure> {
    let bad = |why: &str| Failure::Input(format!("grid '{text}': {why}"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad("not a number"));
    let grid: Vec<f64> = if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected lo:hi:step"));
        }
        let (lo, hi, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        let ordered = step > 0.0 && hi >= lo;
        if !ordered {
            return Err(bad("need hi >= lo and step > 0"));
        }
        let n = ((hi - lo) / step + 1e-9).floor() as usize;
        (0..=n).map(|i| lo + step * i as f64).collect()
    } else {
        text.split(',')
            .filter(|s| !s.trim().is_empty())
            .map(num)
            .collect::<Result<_, _>>()?
    };
    if grid.is_empty() {
        return Err(bad("empty"));
    }
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(bad("values must be finite"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(bad("values must be strictly increasing"));
    }
    Ok(grid)
}

pub fn curves(a: CurvesArgs) -> Outcome {
    let spec = spec_of(&a.process)?;
    let l = spec.window;
    if a.methods.is_empty() {
        return Err(Failure::Input("no methods given".into()));
    }
    let cfg = mc_config(&a.run);
    let base = json!({
        "L": l, "mu": spec.mu, "sigma": spec.sigma, "methods": method_names(&a.methods),
    });
    match (&a.h_grid, &a.t_grid) {
        (Some(g), None) => {
            let hs = parse_grid(g)?;
            let m = a
                .horizon
                .ok_or_else(|| Failure::Input("a threshold grid needs --M".into()))?;
            if m == 0 {
                return Err(Failure::Input("M must be at least 1".into()));
            }
            check_glaz(&a.methods, m, l)?;
            let params = merge(base, json!({ "M": m, "h_grid": g }));
            let mut table = Table::new(
                manifest("curves", merge(params, run_parameters(&a.run))),
                vec!["h", "method", "value", "stderr"],
            );
            let maxima = if a.methods.contains(&BcpMethod::Mc) {
                simulate_window_maxima(&spec, m, &cfg)?
            } else {
                Vec::new()
            };
            for &method in &a.methods {
                for &h in &hs {
                    let (value, stderr) = match method {
                        BcpMethod::Mc => {
                            let n = maxima.len() as f64;
                            let p = maxima.iter().filter(|&&x| x >= h).count() as f64 / n;
                            (p, Some((p * (1.0 - p) / n).sqrt()))
                        }
                        BcpMethod::Glaz => {
                            let r = glaz_bcp(h, m, l, &cfg)?;
                            (r.value, r.stderr)
                        }
                        _ => (approximate(method, h, m, l)?.value, None),
                    };
                    table.push(vec![
                        h.into(),
                        method.name().into(),
                        shown(method, value).into(),
                        Cell::opt(stderr),
                    ]);
                }
            }
            Ok(table.emit(a.run.format, a.run.out.as_deref())?)
        }
        (None, Some(g)) => {
            let ts = parse_grid(g)?;
            let h =
                a.h.ok_or_else(|| Failure::Input("a time grid needs --h".into()))?;
            if ts[0] < 0.0 {
                return Err(Failure::Input("times must be nonnegative".into()));
            }
            if a.methods.contains(&BcpMethod::Glaz) {
                return Err(Failure::Input("glaz has no passage-time curve".into()));
            }
            let params = merge(base, json!({ "h": h, "t_grid": g }));
            let mut table = Table::new(
                manifest("curves", merge(params, run_parameters(&a.run))),
                vec!["t", "method", "value", "stderr"],
            );
            let sample = if a.methods.contains(&BcpMethod::Mc) {
                Some(simulate_passage(&spec, h, &cfg)?)
            } else {
                None
            };
            // Pr(τ ≤ tL) is the crossing probability over the horizon tL.
            for &method in &a.methods {
                for &t in &ts {
                    let (value, stderr) = match method {
                        BcpMethod::Durbin => (durbin(h, t), None),
                        BcpMethod::Pch => (pch(h, t), None),
                        BcpMethod::Diffusion if t == 0.0 => (sf(h), None),
                        BcpMethod::Diffusion => (diffusion_bcp(h, t)?, None),
                        BcpMethod::Cda => (passage_cdf(h, l, t)?, None),
                        BcpMethod::Mc => {
                            let s = sample.as_ref().expect("simulated above");
                            let p = s.empirical_cdf(t);
                            let n = s.times.len() as f64;
                            (p, Some((p * (1.0 - p) / n).sqrt()))
                        }
                        BcpMethod::Glaz => unreachable!("rejected above"),
                    };
                    table.push(vec![
                        t.into(),
                        method.name().into(),
                        shown(method, value).into(),
                        Cell::opt(stderr),
                    ]);
                }
            }
            Ok(table.emit(a.run.format, a.run.out.as_deref())?)
        }
        _ => Err(Failure::Input(
            "give exactly one of --h-grid and --t-grid".into(),
        )),
    }
}

pub fn calibrate(a: CalibrateArgs) -> Outcome {
    let spec = spec_of(&a.process)?;
    let (target, kind, value) = match (a.bcp, a.arl) {
        (Some(p), None) => {
            let m = a
                .horizon
                .ok_or_else(|| Failure::Input("a crossing-probability target needs --M".into()))?;
            (CalibrationTarget::Bcp { p, horizon: m }, "bcp", p)
        }
        (None, Some(arl)) => (CalibrationTarget::Arl(arl), "arl", arl),
        _ => return Err(Failure::Input("give exactly one of --bcp and --arl".into())),
    };
    let c = calibrate_cda(target, &spec)?;
    let params = json!({
        "L": spec.window, "M": a.horizon, "mu": spec.mu, "sigma": spec.sigma,
        "target": kind, "value": value, "method": "cda",
        "format": format!("{:?}", a.format).to_lowercase(),
        "out": a.out.as_ref().map(|p| p.display().to_string()),
    });
    let mut table = Table::new(
        manifest("calibrate", params),
        vec!["target", "value", "h", "H", "achieved", "steps"],
    );
    table.push(vec![
        kind.into(),
        value.into(),
        c.threshold.h.into(),
        c.threshold.raw.into(),
        c.achieved.into(),
        c.steps.into(),
    ]);
    Ok(table.emit(a.format, a.out.as_deref())?)
}
