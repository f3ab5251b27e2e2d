use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum ProjectionMethod {
    /// Top two principal directions of the centered data.
    PrincipalComponents,
    /// An embedding computed elsewhere (e.g. UMAP), one row per input row.
    External2D(Vec<[f64; 2]>),
}

/// Projects `data` (N rows of dimension D >= 2) to 2-D.
///
/// Principal components use the right singular vectors of the centered
/// matrix, each signed so its largest-magnitude loading is positive.
pub fn project_2d<R: AsRef<[f64]>>(data: &[R], method: &ProjectionMethod) -> Result<Vec<[f64; 2]>> {
    let n = data.len();
    if n == 0 {
        return Err(Error::Precondition("projection needs at least one row".into()));
    }
    let d = data[0].as_ref().len();
    for row in data {
        let row = row.as_ref();
        if row.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: row.len(),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::MalformedSignal("non-finite entry in projection input".into()));
        }
    }
    match method {
        ProjectionMethod::External2D(embedding) => {
            if embedding.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: embedding.len(),
                });
            }
            Ok(embedding.clone())
        }
        ProjectionMethod::PrincipalComponents => {
            if d < 2 {
                return Err(Error::DimensionMismatch { expected: 2, got: d });
            }
            Ok(principal_components(data, d))
        }
    }
}

fn principal_components<R: AsRef<[f64]>>(data: &[R], d: usize) -> Vec<[f64; 2]> {
    let n = data.len();
    let mut mean = vec![0.0; d];
    for row in data {
        for (m, v) in mean.iter_mut().zip(row.as_ref()) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let x = DMatrix::from_fn(n, d, |i, j| data[i].as_ref()[j] - mean[j]);
    if n == 1 {
        return vec![[0.0, 0.0]];
    }
    let svd = x.clone().svd(false, true);
    let Some(v_t) = svd.v_t else {
        return vec![[0.0, 0.0]; n];
    };
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .total_cmp(&svd.singular_values[a])
            .then(a.cmp(&b))
    });

    let mut out = vec![[0.0; 2]; n];
    for (slot, &k) in order.iter().take(2).enumerate() {
        let mut dir: Vec<f64> = v_t.row(k).iter().copied().collect();
        let mut pivot = 0;
        for (j, v) in dir.iter().enumerate() {
            if v.abs() > dir[pivot].abs() {
                pivot = j;
            }
        }
        if dir[pivot] < 0.0 {
            dir.iter_mut().for_each(|v| *v = -*v);
        }
        for (i, o) in out.iter_mut().enumerate() {
            o[slot] = x.row(i).iter().zip(&dir).map(|(a, b)| a * b).sum();
        }
    }
    out
}

/// Projects groups of `windows` sub-rows jointly and returns the mean 2-D
/// position of each group. Each input row is the concatenation of its
/// group's sub-rows.
pub fn project_trajectories<R: AsRef<[f64]>>(rows: &[R], windows: usize) -> Result<Vec<Vec<f64>>> {
    let mut expanded: Vec<&[f64]> = Vec::with_capacity(rows.len() * windows);
    let len = rows.first().map_or(0, |r| r.as_ref().len());
    if windows == 0 || len == 0 || len % windows != 0 {
        return Err(Error::MalformedSignal(format!(
            "row length {len} is not a multiple of {windows} windows"
        )));
    }
    for row in rows {
        let row = row.as_ref();
        if row.len() != len {
            return Err(Error::DimensionMismatch {
                expected: len,
                got: row.len(),
            });
        }
        expanded.extend(row.chunks(len / windows));
    }
    let projected = project_2d(&expanded, &ProjectionMethod::PrincipalComponents)?;
    Ok(projected
        .chunks(windows)
        .map(|group| {
            let k = group.len() as f64;
            vec![
                group.iter().map(|p| p[0]).sum::<f64>() / k,
                group.iter().map(|p| p[1]).sum::<f64>() / k,
            ]
        })
        .collect())
}
