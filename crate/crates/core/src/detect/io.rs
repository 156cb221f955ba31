//! Line-oriented `key=value` detector files.

use std::collections::HashMap;
use std::fmt::Write as _;

use super::autoencoder::{Autoencoder, Layer};
use super::{DetectError, Detector, DetectorKind, Dbscan, Model, Normalizer};

pub const FORMAT_HEADER: &str = "confmon-detector v1";

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

pub fn save_detector(d: &Detector) -> String {
    let mut out = String::new();
    let mut kv = |k: &str, v: &dyn std::fmt::Display| writeln!(out, "{k}={v}").unwrap();
    kv("kind", &d.kind);
    kv("model", &d.model_id);
    kv("seed", &d.seed);
    kv("quantile", &d.quantile);
    kv("threshold", &d.threshold);
    kv("columns", &d.columns.join(","));
    kv("norm.min", &join(&d.normalizer.min));
    kv("norm.range", &join(&d.normalizer.range));
    match &d.model {
        Model::Ft => {}
        Model::Dbscan(m) => {
            kv("eps", &m.eps);
            kv("min_pts", &m.min_pts);
            kv("n_clusters", &m.n_clusters);
            kv("core.count", &m.core.len());
            for (i, c) in m.core.iter().enumerate() {
                kv(&format!("core.{i}"), &join(c));
            }
        }
        Model::Ae(ae) => {
            let sizes: Vec<String> = ae.sizes().iter().map(|s| s.to_string()).collect();
            kv("layers", &sizes.join(","));
            for (i, l) in ae.layers.iter().enumerate() {
                kv(&format!("layer.{i}.w"), &join(&l.weights));
                kv(&format!("layer.{i}.b"), &join(&l.biases));
            }
        }
    }
    kv("end", &"");
    format!("{FORMAT_HEADER}\n{out}")
}

struct Fields {
    map: HashMap<String, (usize, String)>,
}

impl Fields {
    fn get(&self, key: &str) -> Result<(usize, &str), DetectError> {
        self.map
            .get(key)
            .map(|(l, v)| (*l, v.as_str()))
            .ok_or_else(|| DetectError::Parse {
                line: 0,
                msg: format!("missing key `{key}`"),
            })
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T, DetectError> {
        let (line, v) = self.get(key)?;
        v.parse().map_err(|_| DetectError::Parse {
            line,
            msg: format!("bad value for `{key}`: `{v}`"),
        })
    }

    fn floats(&self, key: &str, len: usize) -> Result<Vec<f64>, DetectError> {
        let (line, v) = self.get(key)?;
        let bad = |msg: String| DetectError::Parse { line, msg };
        let out: Vec<f64> = if v.is_empty() {
            Vec::new()
        } else {
            v.split(',')
                .map(|x| x.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| bad(format!("bad number list for `{key}`")))?
        };
        if out.len() != len {
            return Err(bad(format!("`{key}` has {} values, expected {len}", out.len())));
        }
        Ok(out)
    }
}

pub fn load_detector(text: &str) -> Result<Detector, DetectError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == FORMAT_HEADER => {}
        Some((_, h)) => return Err(DetectError::Version(h.trim().to_string())),
        None => return Err(DetectError::Version(String::new())),
    }
    let mut map = HashMap::new();
    let mut ended = false;
    for (i, raw) in lines {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        if ended {
            return Err(DetectError::Parse {
                line,
                msg: "content after `end`".into(),
            });
        }
        let (k, v) = raw.split_once('=').ok_or_else(|| DetectError::Parse {
            line,
            msg: "expected key=value".into(),
        })?;
        if k == "end" {
            ended = true;
            continue;
        }
        if map.insert(k.to_string(), (line, v.to_string())).is_some() {
            return Err(DetectError::Parse {
                line,
                msg: format!("duplicate key `{k}`"),
            });
        }
    }
    if !ended {
        return Err(DetectError::Parse {
            line: text.lines().count(),
            msg: "truncated detector file (no `end`)".into(),
        });
    }
    let f = Fields { map };
    let kind: DetectorKind = f.get("kind")?.1.parse()?;
    let columns: Vec<String> = f
        .get("columns")?
        .1
        .split(',')
        .map(str::to_string)
        .collect();
    let width = columns.len() + 1;
    let normalizer = Normalizer {
        min: f.floats("norm.min", width)?,
        range: f.floats("norm.range", width)?,
    };
    let model = match kind {
        DetectorKind::Ft => Model::Ft,
        DetectorKind::Dbscan => {
            let n: usize = f.parse("core.count")?;
            let core = (0..n)
                .map(|i| f.floats(&format!("core.{i}"), width))
                .collect::<Result<_, _>>()?;
            Model::Dbscan(Dbscan {
                eps: f.parse("eps")?,
                min_pts: f.parse("min_pts")?,
                n_clusters: f.parse("n_clusters")?,
                core,
            })
        }
        DetectorKind::Ae => {
            let (line, sizes) = f.get("layers")?;
            let sizes: Vec<usize> = sizes
                .split(',')
                .map(|s| s.parse())
                .collect::<Result<_, _>>()
                .map_err(|_| DetectError::Parse {
                    line,
                    msg: "bad layer sizes".into(),
                })?;
            if sizes.len() < 2 || sizes[0] != width || sizes[sizes.len() - 1] != width {
                return Err(DetectError::Parse {
                    line,
                    msg: format!("layer sizes must start and end at {width}"),
                });
            }
            let layers = sizes
                .windows(2)
                .enumerate()
                .map(|(i, w)| {
                    Ok(Layer {
                        n_in: w[0],
                        n_out: w[1],
                        weights: f.floats(&format!("layer.{i}.w"), w[0] * w[1])?,
                        biases: f.floats(&format!("layer.{i}.b"), w[1])?,
                    })
                })
                .collect::<Result<_, DetectError>>()?;
            Model::Ae(Autoencoder { layers })
        }
    };
    let threshold: f64 = f.parse("threshold")?;
    if !threshold.is_finite() {
        return Err(DetectError::NonFiniteThreshold);
    }
    Ok(Detector {
        kind,
        columns,
        model_id: f.get("model")?.1.to_string(),
        seed: f.parse("seed")?,
        quantile: f.parse("quantile")?,
        threshold,
        normalizer,
        model,
    })
}
