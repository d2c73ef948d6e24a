//! Radon-Nikodym interpolation and classification from weighted samples.
//!
//! A weighted sample `(x_l, f_l, w_l)` is turned into a Lebesgue quadrature
//! by solving `<x f x^T> a = lambda <x x^T> a`: the eigenvalues are the
//! quadrature nodes (typical values of `f`) and the squared eigenfunction
//! means are their weights. Predictors, Christoffel functions, optimal
//! clusters and error estimators are all built on top of that quadrature.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod christoffel;
pub mod clustering;
pub mod eigenkernel;
pub mod error;
pub mod observations;
pub mod pipeline;
pub mod products;
pub mod regularizer;
pub mod spectral;
pub mod vectorlabel;

pub use christoffel::{christoffel_spectrum, lrr_reduce, unsupervised_clusters, ChristoffelSpectrum, LrrBasis};
pub use clustering::{gauss_on_measure, reduce_basis, ClusterBasis, DiscreteMeasure, GaussQuadrature};
pub use eigenkernel::{solve_gsym, GevSolution};
pub use error::{Error, Result};
pub use observations::{parse_column_spec, read_sample, write_evaluation, ColumnSpec, EvaluatedRow, OutputMeta, Sample};
pub use pipeline::{FeatureMap, FittedModel, ModelOptions};
pub use products::{count_products, expand, MultiIndex};
pub use regularizer::{regularize, RegularizationMethod, RegularizedBasis};
pub use spectral::{build_gram, lebesgue_quadrature, GramPair, LebesgueQuadrature, PointEvaluation};
pub use vectorlabel::{CrossGram, ErrorReport};

pub use nalgebra;
