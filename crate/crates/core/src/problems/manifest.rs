//! JSON description of a problem set: every problem is regenerated from the
//! manifest seed through labelled sub-streams.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{
    gen_logistic_synthetic, gen_quadratic_with_spectrum, logistic::logistic_problem, make_init_pair,
    make_ridge, parse_csv_numeric, parse_libsvm, Dataset, Problem, Spectrum, DEFAULT_INIT_STEP,
};
use crate::error::{Error, Result};
use crate::numerics::Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProblemKind {
    Quadratic {
        n: usize,
        #[serde(default)]
        spectrum: Option<Spectrum>,
    },
    Logistic {
        n: usize,
        m_per_class: usize,
        eta: f64,
    },
    RidgeSynthetic {
        rows: usize,
        cols: usize,
        lambda: f64,
    },
    RidgeCsv {
        path: PathBuf,
        target: usize,
        lambda: f64,
    },
    LogisticLibsvm {
        path: PathBuf,
        eta: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    #[serde(flatten)]
    pub kind: ProblemKind,
    #[serde(default = "one")]
    pub count: usize,
    #[serde(default = "one")]
    pub inits_per_function: usize,
}

fn one() -> usize {
    1
}

fn default_init_step() -> f64 {
    DEFAULT_INIT_STEP
}

fn default_stream() -> String {
    "problems".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemManifest {
    pub seed: u64,
    /// Label of the random stream the problems are drawn from, so sets
    /// sharing a seed stay independent.
    #[serde(default = "default_stream")]
    pub stream: String,
    #[serde(default = "default_init_step")]
    pub init_step: f64,
    pub entries: Vec<ManifestEntry>,
}

impl ProblemManifest {
    /// Training set used throughout: `functions` quadratics of dimension `n`,
    /// each with `inits` initialization pairs.
    pub fn quadratics(seed: u64, n: usize, functions: usize, inits: usize) -> Self {
        Self {
            seed,
            stream: default_stream(),
            init_step: DEFAULT_INIT_STEP,
            entries: vec![ManifestEntry {
                kind: ProblemKind::Quadratic { n, spectrum: None },
                count: functions,
                inits_per_function: inits,
            }],
        }
    }

    pub fn with_stream(mut self, stream: &str) -> Self {
        self.stream = stream.into();
        self
    }

    pub fn load(path: &Path) -> Result<Self> {
        let m: Self = serde_json::from_reader(BufReader::new(File::open(path)?))?;
        Ok(m)
    }

    /// Builds every problem; relative data paths resolve against `base`.
    pub fn build(&self, base: &Path) -> Result<Vec<Problem>> {
        if !(self.init_step > 0.0) {
            return Err(Error::InvalidParameter("init_step must be positive".into()));
        }
        let root = Rng::new(self.seed, &self.stream);
        let mut out = Vec::new();
        for (e, entry) in self.entries.iter().enumerate() {
            let data = load_data(&entry.kind, base)?;
            for f in 0..entry.count {
                let mut rng = root.substream(&format!("{e}/{f}"));
                let base_problem = build_one(&entry.kind, data.as_ref(), &mut rng)?;
                for j in 0..entry.inits_per_function {
                    let mut init = rng.substream(&format!("init{j}"));
                    let (xm, x0) =
                        make_init_pair(base_problem.objective.as_ref(), &mut init, self.init_step)?;
                    let mut p = base_problem.with_init(xm, x0)?;
                    p.label = format!("{}-e{e}-f{f}-i{j}", p.label);
                    out.push(p);
                }
            }
        }
        Ok(out)
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn load_data(kind: &ProblemKind, base: &Path) -> Result<Option<Dataset>> {
    Ok(match kind {
        ProblemKind::RidgeCsv { path, target, .. } => {
            Some(parse_csv_numeric(File::open(resolve(base, path))?, *target)?)
        }
        ProblemKind::LogisticLibsvm { path, .. } => Some(
            parse_libsvm(BufReader::new(File::open(resolve(base, path))?))?.with_ones_column(),
        ),
        _ => None,
    })
}

fn build_one(kind: &ProblemKind, data: Option<&Dataset>, rng: &mut Rng) -> Result<Problem> {
    match kind {
        ProblemKind::Quadratic { n, spectrum } => {
            gen_quadratic_with_spectrum(*n, spectrum.unwrap_or_default(), rng)
        }
        ProblemKind::Logistic { n, m_per_class, eta } => {
            gen_logistic_synthetic(*n, *m_per_class, *eta, rng)
        }
        ProblemKind::RidgeSynthetic { rows, cols, lambda } => {
            let mut gen = rng.substream("ridge");
            let features = gen.normal_matrix(*rows, *cols);
            let w = gen.normal_vector(*cols);
            let noise = gen.normal_vector(*rows).scale(0.1);
            let labels = features.matvec(&w).add(&noise);
            make_ridge(&Dataset { features, labels }, *lambda, rng)
        }
        ProblemKind::RidgeCsv { lambda, path, .. } => {
            let mut p = make_ridge(data.expect("loaded"), *lambda, rng)?;
            p.label = format!("ridge-{}", stem(path));
            Ok(p)
        }
        ProblemKind::LogisticLibsvm { eta, path } => {
            logistic_problem(data.expect("loaded"), *eta, rng, format!("logistic-{}", stem(path)))
        }
    }
}

fn stem(p: &Path) -> String {
    p.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "data".into())
}
