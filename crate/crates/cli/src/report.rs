//! JSON report layout. Feature indices are 1-based positions among the
//! retained features; names are echoed alongside.

use std::path::Path;

use serde::Serialize;

use rankmed_core::evaluate::EvalResult;
use rankmed_core::matrix::FeatureMatrix;
use rankmed_core::pipeline::{RedundancyResult, Selection};
use rankmed_core::relevance::RelevanceResult;
use rankmed_core::{Dataset, SolverConfig};

use crate::feature_ref;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FeatureRef {
    pub index: usize,
    pub name: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Tool {
    pub name: &'static str,
    pub version: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassInfo {
    pub code: usize,
    pub name: String,
    pub count: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Input {
    pub path: String,
    pub sha256: String,
    pub instances: usize,
    pub features: Vec<FeatureRef>,
    pub dropped_features: Vec<String>,
    pub classes: Vec<ClassInfo>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Parameters {
    pub label_column: String,
    /// Tolerance as given; 0 means the defaults below.
    pub tol: f64,
    pub svd_tol: f64,
    pub tracker_tol: f64,
    pub eigen_threshold: f64,
    pub variance_floor: f64,
    pub standardize: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compensation: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rel_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub medoids_only: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drop_bottom: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub folds: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_depth: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_leaf: Option<usize>,
}

impl Parameters {
    pub fn set_solver(&mut self, config: &SolverConfig, compensate: bool) {
        self.gamma = Some(config.gamma);
        self.compensation = Some(compensate);
        self.max_iters = Some(config.max_iters);
        self.rel_tol = Some(config.rel_tol);
        self.eps = Some(config.eps);
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub effective_rank: usize,
    pub threshold: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Clustering {
    pub k: usize,
    pub rank_checks: usize,
    pub rank_check_bound: usize,
    /// Member names per cluster, in discovery order.
    pub clusters: Vec<Vec<String>>,
    pub cluster_indices: Vec<Vec<usize>>,
    /// Medoid name of each cluster.
    pub medoids: Vec<String>,
    pub medoid_indices: Vec<usize>,
    pub matrix_rank: usize,
    pub medoid_rank: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RankedFeature {
    pub index: usize,
    pub name: String,
    pub total: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverSummary {
    pub iterations: usize,
    pub converged: bool,
    pub polished: bool,
    pub final_objective: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Relevance {
    pub compensated: bool,
    pub features: Vec<FeatureRef>,
    pub classes: Vec<String>,
    /// `|W_jl|`, one row per feature, one column per class.
    pub per_class: Vec<Vec<f64>>,
    pub total: Vec<f64>,
    /// Weights of the bias row, per class.
    pub bias: Vec<f64>,
    pub ranking: Vec<RankedFeature>,
    pub solver: SolverSummary,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelectionReport {
    pub drop_bottom: usize,
    pub selected: Vec<FeatureRef>,
    /// Lowest relevance first.
    pub dropped: Vec<FeatureRef>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassRate {
    pub class: String,
    pub count: usize,
    pub tp: f64,
    pub fp: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Evaluation {
    pub features: Vec<FeatureRef>,
    pub folds: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    pub weighted_tp: f64,
    pub weighted_fp: f64,
    pub accuracy: f64,
    pub per_class: Vec<ClassRate>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub tool: Tool,
    pub command: String,
    pub input: Input,
    pub parameters: Parameters,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<Spectrum>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clustering: Option<Clustering>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub relevance: Vec<Relevance>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selection: Option<SelectionReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub evaluation: Vec<Evaluation>,
    pub warnings: Vec<String>,
}

fn refs(f: &FeatureMatrix<f64>, features: &[usize]) -> Vec<FeatureRef> {
    features.iter().map(|&j| feature_ref(f.names(), j)).collect()
}

impl AnalysisReport {
    pub fn new(command: &str, path: &Path, data: &Dataset, parameters: Parameters) -> Self {
        let f = &data.features;
        let all: Vec<usize> = (0..f.m()).collect();
        let labels = &data.labels;
        Self {
            tool: Tool {
                name: "rankmed",
                version: rankmed_core::VERSION,
            },
            command: command.to_owned(),
            input: Input {
                path: path.display().to_string(),
                sha256: data.source.as_ref().map(|s| s.sha256.clone()).unwrap_or_default(),
                instances: f.n(),
                features: refs(f, &all),
                dropped_features: data.dropped_features.clone(),
                classes: (0..labels.c())
                    .map(|l| ClassInfo {
                        code: l + 1,
                        name: labels.class_names()[l].clone(),
                        count: labels.class_counts()[l],
                    })
                    .collect(),
            },
            parameters,
            spectrum: None,
            clustering: None,
            relevance: Vec::new(),
            selection: None,
            evaluation: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn set_redundancy(&mut self, f: &FeatureMatrix<f64>, red: &RedundancyResult<f64>) {
        let p = &red.partition;
        let medoids = p.medoids.clone().unwrap_or_default();
        self.spectrum = Some(Spectrum {
            eigenvalues: red.spectrum.eigenvalues.clone(),
            effective_rank: red.spectrum.effective_rank,
            threshold: red.spectrum.threshold,
        });
        if red.spectrum.effective_rank != p.k() {
            self.warnings.push(format!(
                "effective rank {} of the spectrum differs from k = {}",
                red.spectrum.effective_rank,
                p.k()
            ));
        }
        self.clustering = Some(Clustering {
            k: p.k(),
            rank_checks: p.rank_checks,
            rank_check_bound: rankmed_core::redundancy::rank_check_bound(f.m()),
            clusters: p
                .clusters
                .iter()
                .map(|c| c.iter().map(|&j| f.name(j).to_owned()).collect())
                .collect(),
            cluster_indices: p.clusters.iter().map(|c| c.iter().map(|j| j + 1).collect()).collect(),
            medoids: medoids.iter().map(|&j| f.name(j).to_owned()).collect(),
            medoid_indices: medoids.iter().map(|j| j + 1).collect(),
            matrix_rank: red.matrix_rank,
            medoid_rank: red.medoid_rank,
        });
        self.warnings.extend(red.warnings.iter().cloned());
    }

    /// `features` are the rows of the full matrix the result was computed on.
    pub fn add_relevance(&mut self, data: &Dataset, features: &[usize], result: &RelevanceResult<f64>) {
        let f = &data.features;
        let total = result.weights.total();
        let per_class = result.weights.per_class();
        let ranking = rankmed_core::relevance::rank_features(&total)
            .into_iter()
            .map(|(k, t)| RankedFeature {
                index: features[k] + 1,
                name: f.name(features[k]).to_owned(),
                total: t,
            })
            .collect();
        self.relevance.push(Relevance {
            compensated: result.compensated,
            features: refs(f, features),
            classes: data.labels.class_names().to_vec(),
            per_class: per_class.rows().into_iter().map(|r| r.to_vec()).collect(),
            total,
            bias: result.weights.bias_row(),
            ranking,
            solver: SolverSummary {
                iterations: result.report.iterations,
                converged: result.report.converged,
                polished: result.report.polished,
                final_objective: result.report.final_objective(),
            },
        });
        if !result.report.converged && !result.report.polished {
            self.warnings.push(format!(
                "solver stopped after {} iterations without meeting the tolerance",
                result.report.iterations
            ));
        }
    }

    pub fn set_selection(&mut self, f: &FeatureMatrix<f64>, drop_bottom: usize, s: &Selection<f64>) {
        self.selection = Some(SelectionReport {
            drop_bottom,
            selected: refs(f, &s.selected),
            dropped: refs(f, &s.dropped),
        });
    }

    pub fn add_evaluation(&mut self, f: &FeatureMatrix<f64>, r: &EvalResult) {
        self.evaluation.push(Evaluation {
            features: refs(f, &r.feature_subset),
            folds: r.folds,
            max_depth: r.tree.max_depth,
            min_leaf: r.tree.min_leaf,
            weighted_tp: r.weighted_tp,
            weighted_fp: r.weighted_fp,
            accuracy: r.accuracy,
            per_class: r
                .per_class
                .iter()
                .map(|c| ClassRate {
                    class: c.class.clone(),
                    count: c.count,
                    tp: c.tp,
                    fp: c.fp,
                })
                .collect(),
        });
    }
}
