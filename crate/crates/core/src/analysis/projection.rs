use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};

use super::AnalysisError;

/// Exact PCA onto the top two principal components of the centered matrix.
///
/// Each axis is oriented so that its largest-magnitude loading is positive.
/// A second component with variance below `1e-12` of the first is reported
/// as zero.
pub fn project_2d(features: &[(String, Vec<f64>)]) -> Result<Vec<(String, f64, f64)>, AnalysisError> {
    let n = features.len();
    if n < 2 {
        return Err(AnalysisError::TooFewVectors(n));
    }
    let d = features[0].1.len();
    for (label, v) in features {
        if v.len() != d {
            return Err(AnalysisError::FeatureDim {
                word: label.clone(),
                got: v.len(),
                expected: d,
            });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(AnalysisError::NonFinite);
        }
    }
    let mut x = DMatrix::from_fn(n, d, |i, j| features[i].1[j]);
    for j in 0..d {
        let mean = x.column(j).sum() / n as f64;
        x.column_mut(j).add_scalar_mut(-mean);
    }
    let gram = &x * x.transpose();
    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let top = eig.eigenvalues[order[0]];
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || top <= f64::EPSILON * scale * scale * (n * d) as f64 {
        return Err(AnalysisError::Degenerate);
    }

    let mut scores = [alloc::vec![0.0; n], alloc::vec![0.0; n]];
    for (k, out) in scores.iter_mut().enumerate() {
        let Some(&idx) = order.get(k) else { break };
        let lambda = eig.eigenvalues[idx];
        if k > 0 && lambda <= 1e-12 * top {
            continue;
        }
        let u = eig.eigenvectors.column(idx);
        // loading vector in feature space is Xᵀu up to a positive factor
        let loading = x.transpose() * u;
        let pivot = loading
            .iter()
            .copied()
            .fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        let root = libm::sqrt(lambda.max(0.0));
        for i in 0..n {
            out[i] = sign * root * u[i];
        }
    }
    Ok(features
        .iter()
        .enumerate()
        .map(|(i, (label, _))| (label.clone(), scores[0][i], scores[1][i]))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn f(items: &[Vec<f64>]) -> Vec<(String, Vec<f64>)> {
        items
            .iter()
            .enumerate()
            .map(|(i, v)| (alloc::format!("w{i}"), v.clone()))
            .collect()
    }

    #[test]
    fn centered_2d_is_reproduced_up_to_isometry() {
        let pts = vec![vec![1.0, 0.5], vec![-1.0, -0.5], vec![0.2, -1.0], vec![-0.2, 1.0]];
        let out = project_2d(&f(&pts)).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let d0 = ((pts[i][0] - pts[j][0]).powi(2) + (pts[i][1] - pts[j][1]).powi(2)).sqrt();
                let d1 = ((out[i].1 - out[j].1).powi(2) + (out[i].2 - out[j].2).powi(2)).sqrt();
                assert!((d0 - d1).abs() < 1e-12, "{d0} {d1}");
            }
        }
    }

    #[test]
    fn collinear_points_have_no_second_component() {
        let dir: Vec<f64> = (0..10).map(|i| (i as f64 * 0.37).sin()).collect();
        let pts: Vec<Vec<f64>> = [0.0, 1.0, 3.5]
            .iter()
            .map(|t| dir.iter().map(|d| 2.0 + t * d).collect())
            .collect();
        let out = project_2d(&f(&pts)).unwrap();
        let mean = out.iter().map(|o| o.2).sum::<f64>() / 3.0;
        let var = out.iter().map(|o| (o.2 - mean).powi(2)).sum::<f64>() / 3.0;
        assert!(var < 1e-12);
    }

    #[test]
    fn errors() {
        assert_eq!(project_2d(&f(&[vec![1.0]])), Err(AnalysisError::TooFewVectors(1)));
        assert_eq!(
            project_2d(&f(&[vec![1.0, 2.0], vec![1.0, 2.0]])),
            Err(AnalysisError::Degenerate)
        );
        assert!(matches!(
            project_2d(&f(&[vec![1.0, 2.0], vec![1.0]])),
            Err(AnalysisError::FeatureDim { .. })
        ));
    }

    #[test]
    fn sign_convention_is_fixed() {
        let pts = vec![vec![0.0, 0.0, 5.0], vec![0.0, 0.0, -5.0], vec![1.0, 0.0, 0.0]];
        let a = project_2d(&f(&pts)).unwrap();
        let neg: Vec<Vec<f64>> = pts.iter().map(|p| p.iter().map(|v| -v).collect()).collect();
        let b = project_2d(&f(&neg)).unwrap();
        // negated input flips every loading, so scores flip too
        for (x, y) in a.iter().zip(&b) {
            assert!((x.1 + y.1).abs() < 1e-12 && (x.2 + y.2).abs() < 1e-12);
        }
        assert!(a[0].1 > 0.0);
    }
}
