//! Model building from a sample: regularize, optionally expand to product
//! attributes and regularize again, then build the Lebesgue quadrature and
//! optionally reduce it to D clusters.

use nalgebra::{DMatrix, DVector, DVectorView};

use crate::christoffel::{christoffel_spectrum, christoffel_values};
use crate::clustering::{reduce_basis, ClusterBasis};
use crate::error::{Error, Result};
use crate::observations::Sample;
use crate::products::{ProductMap, DEFAULT_CAP};
use crate::regularizer::{regularize, weighted_gram, RegularizationMethod, RegularizedBasis};
use crate::spectral::{build_gram, lebesgue_quadrature, GramPair, LebesgueQuadrature, PointEvaluation};
use crate::vectorlabel::diagonalize_f_in_k_basis;

#[derive(Debug, Clone)]
pub enum Stage {
    Regularize(RegularizedBasis),
    Products(ProductMap),
}

/// Chain of fitted stages taking raw attributes to the model basis.
#[derive(Debug, Clone)]
pub struct FeatureMap {
    pub stages: Vec<Stage>,
}

impl FeatureMap {
    pub fn fit(
        x: &DMatrix<f64>,
        w: &DVector<f64>,
        method: RegularizationMethod,
        max_multiindex: Option<usize>,
        cap: usize,
    ) -> Result<Self> {
        let first = regularize(x, w, method)?;
        let mut stages = vec![Stage::Regularize(first.clone())];
        if let Some(degree) = max_multiindex {
            let current = first.apply(x);
            let products = ProductMap::new(&current, degree, cap)?;
            let expanded = products.apply(&current);
            let again = regularize(&expanded, w, method)?;
            stages.push(Stage::Products(products));
            stages.push(Stage::Regularize(again));
        }
        Ok(FeatureMap { stages })
    }

    pub fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut cur = x.clone();
        for s in &self.stages {
            cur = match s {
                Stage::Regularize(b) => b.apply(&cur),
                Stage::Products(p) => p.apply(&cur),
            };
        }
        cur
    }

    pub fn apply_row(&self, x: DVectorView<'_, f64>) -> DVector<f64> {
        let row = DMatrix::from_row_slice(1, x.len(), x.as_slice());
        self.apply(&row).row(0).transpose()
    }

    pub fn input_dim(&self) -> usize {
        match &self.stages[0] {
            Stage::Regularize(b) => b.input_dim(),
            Stage::Products(_) => unreachable!("first stage is always a regularization"),
        }
    }

    pub fn dim(&self) -> usize {
        self.stages
            .iter()
            .rev()
            .find_map(|s| match s {
                Stage::Regularize(b) => Some(b.dim()),
                Stage::Products(_) => None,
            })
            .unwrap_or(0)
    }
}

#[derive(Debug, Clone)]
pub struct ModelOptions {
    pub method: RegularizationMethod,
    pub max_multiindex: Option<usize>,
    pub clusters: Option<usize>,
    pub replace_f_by_christoffel: bool,
    pub assume_f_diagonal_in_christoffel_basis: bool,
    pub product_cap: usize,
}

impl Default for ModelOptions {
    fn default() -> Self {
        ModelOptions {
            method: RegularizationMethod::Ev,
            max_multiindex: None,
            clusters: None,
            replace_f_by_christoffel: false,
            assume_f_diagonal_in_christoffel_basis: false,
            product_cap: DEFAULT_CAP,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FittedModel {
    pub features: FeatureMap,
    pub gram: GramPair,
    pub quadrature: LebesgueQuadrature,
    pub clusters: Option<ClusterBasis>,
    /// Class label the model was built on (the Christoffel function when requested).
    pub f_used: DVector<f64>,
}

impl FittedModel {
    pub fn fit(sample: &Sample, opts: &ModelOptions) -> Result<Self> {
        if opts.max_multiindex == Some(0) {
            return Err(Error::InvalidArgument("max_multiindex must be at least 1".into()));
        }
        if opts.clusters == Some(0) {
            return Err(Error::InvalidArgument("clusters_number must be at least 1".into()));
        }
        let features = FeatureMap::fit(&sample.x, &sample.w, opts.method, opts.max_multiindex, opts.product_cap)?;
        let x = features.apply(&sample.x);
        let f_used = if opts.replace_f_by_christoffel {
            christoffel_values(&x, &weighted_gram(&x, &sample.w))?
        } else {
            sample.f.clone()
        };
        let mut gram = build_gram(&x, &f_used, &sample.w)?;
        if opts.assume_f_diagonal_in_christoffel_basis {
            let spectrum = christoffel_spectrum(&x, &sample.w)?;
            gram = diagonalize_f_in_k_basis(&gram, &spectrum);
        }
        let quadrature = lebesgue_quadrature(&gram)?;
        let clusters = opts.clusters.map(|d| reduce_basis(&quadrature, d)).transpose()?;
        Ok(FittedModel {
            features,
            gram,
            quadrature,
            clusters,
            f_used,
        })
    }

    /// The quadrature used for evaluation: the cluster one when clustering was requested.
    pub fn active(&self) -> &LebesgueQuadrature {
        self.clusters.as_ref().map_or(&self.quadrature, |c| &c.quadrature)
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        if n != self.features.input_dim() {
            return Err(Error::Dimension(format!(
                "model expects {} attributes, got {n}",
                self.features.input_dim()
            )));
        }
        Ok(())
    }

    pub fn evaluate(&self, x: DVectorView<'_, f64>) -> Result<PointEvaluation> {
        self.check_dim(x.len())?;
        Ok(self.active().evaluate(self.features.apply_row(x).as_view()))
    }

    pub fn evaluate_matrix(&self, x: &DMatrix<f64>) -> Result<Vec<PointEvaluation>> {
        self.check_dim(x.ncols())?;
        let q = self.active();
        let psi = q.psi_matrix(&self.features.apply(x));
        Ok(psi.row_iter().map(|r| q.evaluate_psi(r.transpose())).collect())
    }

    pub fn evaluate_sample(&self, sample: &Sample) -> Result<Vec<PointEvaluation>> {
        self.evaluate_matrix(&sample.x)
    }

    /// `<x_k | psi_i>` over a sample, n x D.
    pub fn projections(&self, sample: &Sample) -> Result<DMatrix<f64>> {
        self.check_dim(sample.dim())?;
        let mut psi = self.active().psi_matrix(&self.features.apply(&sample.x));
        for (l, mut row) in psi.row_iter_mut().enumerate() {
            row *= sample.w[l];
        }
        Ok(sample.x.transpose() * psi)
    }
}
