//! Run configuration documents.
//!
//! One `key = value` pair per line; `#` starts a comment; lists are
//! comma-separated and may be wrapped in brackets.
//!
//! | key | required | default |
//! |-----|----------|---------|
//! | `n` | yes | |
//! | `times` | yes | |
//! | `sampler` | yes | `uniform(a)`, `gaussian(sigma)` or `grid(k, a)` |
//! | `samples` | no | 1 |
//! | `seed` | no | 0 |
//! | `threads` | no | all cores |
//! | `output` | no | `records.csv` |
//! | `ode_tol` | no | 1e-10 |
//! | `norm_drift_ceiling` | no | 1e-6 |
//! | `gap_grid` | no | 1001 |
//! | `refine_tol` | no | 1e-8 |
//! | `overlap_grid` | no | 501 |
//! | `diag_grid` | no | 201 |
//! | `deg_tol` | no | 1e-9 |
//! | `plot_output` | no | none |
//! | `plot_kind` | no | `scatter` |
//! | `plot_x`, `plot_y`, `plot_color` | no | `min_gap`, `P`, `abs_J_top` |
//! | `plot_cmin`, `plot_cmax` | no | data range |

use std::collections::HashMap;
use std::path::PathBuf;

use crate::ensemble::{EnsembleConfig, SamplerKind, SamplerSpec};
use crate::error::{Error, Result};
use crate::io::plot::{PlotKind, PlotSpec};
use crate::metrics::Settings;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub ensemble: EnsembleConfig,
    pub output: PathBuf,
    /// Plot emitted after the run, with its output path.
    pub plot: Option<(PlotSpec, PathBuf)>,
}

const KEYS: [&str; 21] = [
    "n",
    "times",
    "sampler",
    "samples",
    "seed",
    "threads",
    "output",
    "ode_tol",
    "norm_drift_ceiling",
    "gap_grid",
    "refine_tol",
    "overlap_grid",
    "diag_grid",
    "deg_tol",
    "plot_output",
    "plot_kind",
    "plot_x",
    "plot_y",
    "plot_color",
    "plot_cmin",
    "plot_cmax",
];

struct Entries<'a> {
    map: HashMap<&'a str, (usize, &'a str)>,
}

fn err(line: usize, key: &str, msg: impl Into<String>) -> Error {
    Error::Config { line, key: key.to_string(), msg: msg.into() }
}

impl<'a> Entries<'a> {
    fn raw(&self, key: &str) -> Option<(usize, &'a str)> {
        self.map.get(key).copied()
    }

    fn required(&self, key: &str) -> Result<(usize, &'a str)> {
        self.raw(key).ok_or_else(|| err(0, key, "required key missing"))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.raw(key) {
            None => Ok(default),
            Some((line, v)) => v.parse().map_err(|_| err(line, key, format!("cannot parse `{v}`"))),
        }
    }

    fn positive(&self, key: &str, default: f64) -> Result<f64> {
        let v = self.parse(key, default)?;
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(err(self.raw(key).map_or(0, |r| r.0), key, format!("{v} must be > 0")))
        }
    }

    fn at_least(&self, key: &str, default: usize, min: usize) -> Result<usize> {
        let v = self.parse(key, default)?;
        if v >= min {
            Ok(v)
        } else {
            Err(err(self.raw(key).map_or(0, |r| r.0), key, format!("{v} must be >= {min}")))
        }
    }
}

fn split_list(v: &str) -> Vec<&str> {
    let v = v.trim();
    let v = v.strip_prefix('[').and_then(|s| s.strip_suffix(']')).unwrap_or(v);
    v.split(',').map(str::trim).collect()
}

fn parse_sampler(line: usize, v: &str) -> Result<SamplerKind> {
    let bad = |msg: &str| err(line, "sampler", format!("{msg} in `{v}`"));
    let open = v.find('(').ok_or_else(|| bad("expected name(args)"))?;
    let body = v[open + 1..].strip_suffix(')').ok_or_else(|| bad("missing `)`"))?;
    let args: Vec<&str> = body.split(',').map(str::trim).collect();
    let num = |s: &str| s.parse::<f64>().map_err(|_| bad("bad number"));
    let kind = match (v[..open].trim(), args.as_slice()) {
        ("uniform", [a]) => SamplerKind::Uniform { half_width: num(a)? },
        ("gaussian", [s]) => SamplerKind::Gaussian { sigma: num(s)? },
        ("grid", [k, a]) => SamplerKind::Grid {
            points_per_axis: k.parse().map_err(|_| bad("bad point count"))?,
            half_width: num(a)?,
        },
        _ => return Err(bad("unknown sampler or wrong argument count")),
    };
    SamplerSpec { kind, seed: 0 }.validate().map_err(|e| err(line, "sampler", e.to_string()))?;
    Ok(kind)
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut map = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(line, content, "expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(err(line, key, "unknown key"));
        }
        if value.is_empty() {
            return Err(err(line, key, "empty value"));
        }
        if let Some((prev, _)) = map.insert(key, (line, value)) {
            return Err(err(line, key, format!("duplicate key (first on line {prev})")));
        }
    }
    let e = Entries { map };

    let (n_line, n_raw) = e.required("n")?;
    let n: usize = n_raw.parse().map_err(|_| err(n_line, "n", format!("cannot parse `{n_raw}`")))?;
    if n < 1 || n > crate::hamiltonian::MAX_QUBITS {
        return Err(err(n_line, "n", format!("{n} outside 1..={}", crate::hamiltonian::MAX_QUBITS)));
    }

    let (t_line, t_raw) = e.required("times")?;
    let times = split_list(t_raw)
        .into_iter()
        .map(|s| {
            let t: f64 = s.parse().map_err(|_| err(t_line, "times", format!("cannot parse `{s}`")))?;
            if t > 0.0 && t.is_finite() {
                Ok(t)
            } else {
                Err(err(t_line, "times", format!("{t} must be > 0")))
            }
        })
        .collect::<Result<Vec<f64>>>()?;

    let (s_line, s_raw) = e.required("sampler")?;
    let kind = parse_sampler(s_line, s_raw)?;

    let settings = Settings {
        ode_tol: e.positive("ode_tol", crate::evolution::DEFAULT_ODE_TOL)?,
        norm_drift_ceiling: e.positive("norm_drift_ceiling", crate::evolution::DEFAULT_NORM_DRIFT_CEILING)?,
        gap_grid: e.at_least("gap_grid", crate::spectrum::DEFAULT_COARSE_POINTS, 3)?,
        refine_tol: e.positive("refine_tol", crate::spectrum::DEFAULT_REFINE_TOL)?,
        overlap_grid: e.at_least("overlap_grid", crate::metrics::DEFAULT_OVERLAP_GRID, 2)?,
        diag_grid: e.at_least("diag_grid", crate::metrics::DEFAULT_DIAG_GRID, 2)?,
        deg_tol: e.positive("deg_tol", crate::spectrum::DEFAULT_DEG_TOL)?,
    };

    let threads = match e.raw("threads") {
        None => None,
        Some(_) => Some(e.at_least("threads", 1, 1)?),
    };

    let ensemble = EnsembleConfig {
        n,
        times,
        sample_count: e.parse("samples", 1u64)?,
        sampler: SamplerSpec { kind, seed: e.parse("seed", 0u64)? },
        settings,
        threads,
    };
    // remaining failures are sample counts: zero, or past the end of a grid
    if let Err(msg) = ensemble.validate() {
        return Err(err(e.raw("samples").map_or(0, |r| r.0), "samples", msg.to_string()));
    }

    let output = PathBuf::from(e.raw("output").map_or("records.csv", |r| r.1));

    let plot = match e.raw("plot_output") {
        None => None,
        Some((_, path)) => {
            let kind = match e.raw("plot_kind") {
                None => PlotKind::Scatter,
                Some((line, v)) => v.parse().map_err(|m: Error| err(line, "plot_kind", m.to_string()))?,
            };
            let field = |key: &str, default: &str| e.raw(key).map_or(default, |r| r.1).to_string();
            let opt = |key: &str| -> Result<Option<f64>> {
                match e.raw(key) {
                    None => Ok(None),
                    Some(_) => Ok(Some(e.parse(key, 0.0)?)),
                }
            };
            let spec = PlotSpec {
                kind,
                x: field("plot_x", "min_gap"),
                y: field("plot_y", "P"),
                color: field("plot_color", "abs_J_top"),
                cmin: opt("plot_cmin")?,
                cmax: opt("plot_cmax")?,
            };
            spec.check_fields(n).map_err(|m| err(0, "plot", m.to_string()))?;
            Some((spec, PathBuf::from(path)))
        }
    };

    Ok(RunConfig { ensemble, output, plot })
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG: &str = "\
# two-qubit scatter run
n = 2
times = 5, 10, 20, 40
sampler = uniform(3)
samples = 10000
seed = 2024
";

    fn key_of(e: Error) -> (usize, String) {
        match e {
            Error::Config { line, key, .. } => (line, key),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn empty_document_reports_missing_key() {
        let (line, key) = key_of(parse_config("").unwrap_err());
        assert_eq!(line, 0);
        assert_eq!(key, "n");
        let (_, key) = key_of(parse_config("n = 2\n").unwrap_err());
        assert_eq!(key, "times");
        let (_, key) = key_of(parse_config("n = 2\ntimes = 5\n").unwrap_err());
        assert_eq!(key, "sampler");
    }

    #[test]
    fn scatter_run_and_defaults() {
        let c = parse_config(FIG).unwrap();
        assert_eq!(c.ensemble.n, 2);
        assert_eq!(c.ensemble.times, vec![5.0, 10.0, 20.0, 40.0]);
        assert_eq!(c.ensemble.sample_count, 10000);
        assert_eq!(c.ensemble.sampler, SamplerSpec { kind: SamplerKind::Uniform { half_width: 3.0 }, seed: 2024 });
        assert_eq!(c.ensemble.settings, Settings::default());
        assert_eq!(c.ensemble.settings.ode_tol, 1e-10);
        assert_eq!(c.ensemble.settings.gap_grid, 1001);
        assert_eq!(c.ensemble.settings.overlap_grid, 501);
        assert_eq!(c.ensemble.settings.deg_tol, 1e-9);
        assert_eq!(c.output, PathBuf::from("records.csv"));
        assert!(c.plot.is_none());
        assert_eq!(c.ensemble.threads, None);
    }

    #[test]
    fn negative_tolerance_rejected() {
        let text = format!("{FIG}ode_tol = -1e-10\n");
        let (line, key) = key_of(parse_config(&text).unwrap_err());
        assert_eq!(key, "ode_tol");
        assert_eq!(line, 7);
    }

    #[test]
    fn unknown_and_duplicate_keys() {
        let (line, key) = key_of(parse_config(&format!("{FIG}colour = red\n")).unwrap_err());
        assert_eq!((line, key.as_str()), (7, "colour"));
        let (line, key) = key_of(parse_config(&format!("{FIG}n = 3\n")).unwrap_err());
        assert_eq!((line, key.as_str()), (7, "n"));
        let (line, _) = key_of(parse_config("n 2\n").unwrap_err());
        assert_eq!(line, 1);
    }

    #[test]
    fn sampler_forms() {
        let base = "n = 3\ntimes = [5]\n";
        let g = parse_config(&format!("{base}sampler = gaussian(0.5)\n")).unwrap();
        assert_eq!(g.ensemble.sampler.kind, SamplerKind::Gaussian { sigma: 0.5 });
        let g = parse_config(&format!("{base}sampler = grid(3, 2)\nsamples = 27\n")).unwrap();
        assert_eq!(g.ensemble.sampler.kind, SamplerKind::Grid { points_per_axis: 3, half_width: 2.0 });
        for bad in ["uniform()", "uniform(-1)", "cauchy(1)", "grid(3)", "uniform 3"] {
            let (_, key) = key_of(parse_config(&format!("{base}sampler = {bad}\n")).unwrap_err());
            assert_eq!(key, "sampler", "{bad}");
        }
        let (_, key) = key_of(parse_config(&format!("{base}sampler = grid(2, 1)\nsamples = 1000\n")).unwrap_err());
        assert_eq!(key, "samples");
    }

    #[test]
    fn bad_values_carry_line() {
        for (extra, key) in [
            ("times = 5, -1", "times"),
            ("gap_grid = 2", "gap_grid"),
            ("threads = 0", "threads"),
            ("samples = many", "samples"),
            ("deg_tol = 0", "deg_tol"),
        ] {
            let text = format!("n = 2\nsampler = uniform(3)\n{extra}\n{}", if key == "times" { "" } else { "times = 5\n" });
            let (line, k) = key_of(parse_config(&text).unwrap_err());
            assert_eq!(k, key);
            assert_eq!(line, 3, "{extra}");
        }
        let (_, k) = key_of(parse_config("n = 20\ntimes = 5\nsampler = uniform(3)\n").unwrap_err());
        assert_eq!(k, "n");
    }

    #[test]
    fn plot_options() {
        let text = format!(
            "{FIG}plot_output = fig.svg\nplot_x = min_gap\nplot_y = s_star\nplot_color = P\nplot_cmin = 0\nplot_cmax = 1\n"
        );
        let (spec, path) = parse_config(&text).unwrap().plot.unwrap();
        assert_eq!(path, PathBuf::from("fig.svg"));
        assert_eq!(spec.kind, PlotKind::Scatter);
        assert_eq!((spec.x.as_str(), spec.y.as_str(), spec.color.as_str()), ("min_gap", "s_star", "P"));
        assert_eq!((spec.cmin, spec.cmax), (Some(0.0), Some(1.0)));
        let bad = format!("{FIG}plot_output = fig.svg\nplot_color = nonsense\n");
        assert!(parse_config(&bad).is_err());
        let bad = format!("{FIG}plot_output = fig.svg\nplot_kind = pie\n");
        assert_eq!(key_of(parse_config(&bad).unwrap_err()).1, "plot_kind");
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = "\n  # header\nn = 1 # one qubit\n\ntimes=5\nsampler=uniform(1)\noutput = out/run.csv\nthreads = 2\n";
        let c = parse_config(text).unwrap();
        assert_eq!(c.ensemble.n, 1);
        assert_eq!(c.output, PathBuf::from("out/run.csv"));
        assert_eq!(c.ensemble.threads, Some(2));
    }
}
