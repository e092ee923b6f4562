//! Pareto dominance, archive maintenance, and exact hypervolume for up to
//! three objectives (minimisation).

use crate::error::{check_dim, Error, Result};

/// `a` weakly dominates `b` and is strictly better somewhere.
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    let mut strictly = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strictly = true;
        }
    }
    strictly
}

/// Indices of the nondominated points. Of several identical points only the
/// first is kept.
pub fn nondominated_indices(points: &[Vec<f64>]) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| {
            !points.iter().enumerate().any(|(j, q)| {
                dominates(q, &points[i]) || (j < i && q.as_slice() == points[i].as_slice())
            })
        })
        .collect()
}

pub fn nondominated_filter(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    nondominated_indices(points)
        .into_iter()
        .map(|i| points[i].clone())
        .collect()
}

fn check_reference(front: &[Vec<f64>], reference: &[f64]) -> Result<()> {
    for p in front {
        check_dim(reference.len(), p.len())?;
        if p.iter().zip(reference).any(|(a, r)| !(a < r)) {
            return Err(Error::InvalidReference {
                point: p.clone(),
                reference: reference.to_vec(),
            });
        }
    }
    Ok(())
}

/// Area dominated by `pts` (each assumed inside the reference box).
fn hv2(pts: &mut [[f64; 2]], reference: [f64; 2]) -> f64 {
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let mut area = 0.0;
    let mut ceiling = reference[1];
    for p in pts.iter() {
        if p[1] < ceiling {
            area += (reference[0] - p[0]) * (ceiling - p[1]);
            ceiling = p[1];
        }
    }
    area
}

/// Volume by slicing along the third objective into 2-D sweeps.
fn hv3(pts: &[Vec<f64>], reference: &[f64]) -> f64 {
    let mut sorted: Vec<&Vec<f64>> = pts.iter().collect();
    sorted.sort_by(|a, b| a[2].total_cmp(&b[2]));
    let mut volume = 0.0;
    let mut slice: Vec<[f64; 2]> = Vec::with_capacity(sorted.len());
    for (i, p) in sorted.iter().enumerate() {
        slice.push([p[0], p[1]]);
        let top = sorted.get(i + 1).map_or(reference[2], |q| q[2]);
        let depth = top - p[2];
        if depth > 0.0 {
            volume += depth * hv2(&mut slice.clone(), [reference[0], reference[1]]);
        }
    }
    volume
}

fn hv_unchecked(front: &[Vec<f64>], reference: &[f64]) -> Result<f64> {
    if front.is_empty() {
        return Ok(0.0);
    }
    match reference.len() {
        1 => Ok(reference[0] - front.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min)),
        2 => {
            let mut pts: Vec<[f64; 2]> = front.iter().map(|p| [p[0], p[1]]).collect();
            Ok(hv2(&mut pts, [reference[0], reference[1]]))
        }
        3 => Ok(hv3(front, reference)),
        m => Err(Error::InvalidArgument(format!(
            "exact hypervolume supports m <= 3, got {m}"
        ))),
    }
}

/// Lebesgue measure of ∪ [fᵢ, ref]. Every point must strictly dominate the
/// reference point.
pub fn hypervolume(front: &[Vec<f64>], reference: &[f64]) -> Result<f64> {
    check_reference(front, reference)?;
    hv_unchecked(front, reference)
}

/// HV(front ∪ {p}) − HV(front). Zero when `p` does not strictly dominate
/// the reference point.
pub fn hypervolume_improvement(front: &[Vec<f64>], p: &[f64], reference: &[f64]) -> Result<f64> {
    check_dim(reference.len(), p.len())?;
    if p.iter().zip(reference).any(|(a, r)| !(a < r)) {
        return Ok(0.0);
    }
    // the part of p's box already covered is the union of boxes of max(p, q)
    let own: f64 = p.iter().zip(reference).map(|(a, r)| r - a).product();
    let clipped: Vec<Vec<f64>> = front
        .iter()
        .map(|q| q.iter().zip(p).map(|(a, b)| a.max(*b)).collect())
        .collect();
    let covered = hv_unchecked(&clipped, reference)?;
    Ok((own - covered).max(0.0))
}

/// Mutually nondominated points that all strictly dominate `ref_point`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParetoArchive {
    points: Vec<Vec<f64>>,
    ref_point: Vec<f64>,
}

impl ParetoArchive {
    pub fn new(ref_point: Vec<f64>) -> Self {
        ParetoArchive {
            points: Vec::new(),
            ref_point,
        }
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn ref_point(&self) -> &[f64] {
        &self.ref_point
    }

    /// Returns whether `p` entered the archive.
    pub fn insert(&mut self, p: &[f64]) -> Result<bool> {
        check_dim(self.ref_point.len(), p.len())?;
        if p.iter().zip(&self.ref_point).any(|(a, r)| !(a < r)) {
            return Ok(false);
        }
        if self
            .points
            .iter()
            .any(|q| dominates(q, p) || q.as_slice() == p)
        {
            return Ok(false);
        }
        self.points.retain(|q| !dominates(p, q));
        self.points.push(p.to_vec());
        Ok(true)
    }

    pub fn hypervolume(&self) -> Result<f64> {
        hv_unchecked(&self.points, &self.ref_point)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::streams;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn filter_examples() {
        let pts = vec![vec![1.0, 2.0], vec![2.0, 1.0], vec![2.0, 2.0]];
        assert_eq!(
            nondominated_filter(&pts),
            vec![vec![1.0, 2.0], vec![2.0, 1.0]]
        );
        let same = vec![vec![0.5, 0.5]; 4];
        assert_eq!(nondominated_indices(&same), vec![0]);
    }

    #[test]
    fn filter_matches_brute_force() {
        let mut rng = streams::seeded(17);
        let pts: Vec<Vec<f64>> = (0..200)
            .map(|_| (0..3).map(|_| rng.random::<f64>()).collect())
            .collect();
        let expected: Vec<usize> = (0..pts.len())
            .filter(|&i| {
                (0..pts.len()).all(|j| {
                    let all_le = (0..3).all(|k| pts[j][k] <= pts[i][k]);
                    let any_lt = (0..3).any(|k| pts[j][k] < pts[i][k]);
                    !(all_le && any_lt)
                })
            })
            .collect();
        assert_eq!(nondominated_indices(&pts), expected);
    }

    #[test]
    fn hypervolume_examples() {
        assert_eq!(hypervolume(&[vec![0.0, 0.0]], &[1.0, 1.0]).unwrap(), 1.0);
        let hv = hypervolume(&[vec![0.25, 0.75], vec![0.75, 0.25]], &[1.0, 1.0]).unwrap();
        assert!((hv - 0.3125).abs() < 1e-15);
        assert_eq!(hypervolume(&[], &[1.0, 1.0]).unwrap(), 0.0);
        assert!(matches!(
            hypervolume(&[vec![1.0, 0.5]], &[1.0, 1.0]),
            Err(Error::InvalidReference { .. })
        ));
    }

    #[test]
    fn single_point_is_box_volume() {
        let p = vec![0.1, 0.3, 0.7];
        let r = [1.0, 2.0, 0.9];
        let hv = hypervolume(std::slice::from_ref(&p), &r).unwrap();
        assert_eq!(hv, (1.0 - 0.1) * (2.0 - 0.3) * (0.9 - 0.7));
    }

    #[test]
    fn three_d_staircase() {
        // inclusion–exclusion by hand for two boxes
        let a = vec![0.0, 0.5, 0.5];
        let b = vec![0.5, 0.0, 0.0];
        let r = [1.0, 1.0, 1.0];
        let expected = 0.25 + 0.5 - 0.5 * 0.5 * 0.5;
        assert!((hypervolume(&[a, b], &r).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn improvement_examples() {
        let front = vec![vec![0.5, 0.5]];
        let r = [1.0, 1.0];
        assert_eq!(
            hypervolume_improvement(&front, &[0.6, 0.7], &r).unwrap(),
            0.0
        );
        assert!(
            (hypervolume_improvement(&front, &[0.25, 0.25], &r).unwrap() - (0.5625 - 0.25)).abs()
                < 1e-15
        );
        assert_eq!(
            hypervolume_improvement(&front, &[0.2, 1.5], &r).unwrap(),
            0.0
        );
    }

    #[test]
    fn archive_keeps_front() {
        let mut a = ParetoArchive::new(vec![1.0, 1.0]);
        assert!(a.insert(&[0.5, 0.5]).unwrap());
        assert!(!a.insert(&[0.6, 0.6]).unwrap());
        assert!(!a.insert(&[0.5, 0.5]).unwrap());
        assert!(!a.insert(&[0.1, 1.0]).unwrap());
        assert!(a.insert(&[0.2, 0.8]).unwrap());
        assert!(a.insert(&[0.4, 0.4]).unwrap());
        assert_eq!(a.points().len(), 2);
        assert!(
            (a.hypervolume().unwrap() - hypervolume(a.points(), &[1.0, 1.0]).unwrap()).abs()
                < 1e-15
        );
    }

    proptest! {
        #[test]
        fn adding_a_point_never_decreases_hypervolume(
            pts in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 3), 1..10),
            extra in prop::collection::vec(0.0f64..1.0, 3),
        ) {
            let r = [1.0, 1.0, 1.0];
            let front = nondominated_filter(&pts);
            let before = hypervolume(&front, &r).unwrap();
            let mut grown = front.clone();
            grown.push(extra.clone());
            let after = hypervolume(&nondominated_filter(&grown), &r).unwrap();
            prop_assert!(after >= before - 1e-12);
            let hvi = hypervolume_improvement(&front, &extra, &r).unwrap();
            prop_assert!((after - before - hvi).abs() < 1e-12);
        }

        #[test]
        fn permuting_objectives_preserves_hypervolume(
            pts in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 3), 1..8),
        ) {
            let r = vec![1.0, 1.2, 1.4];
            let front = nondominated_filter(&pts);
            let perm = [2usize, 0, 1];
            let permuted: Vec<Vec<f64>> = front.iter().map(|p| perm.iter().map(|&k| p[k]).collect()).collect();
            let rp: Vec<f64> = perm.iter().map(|&k| r[k]).collect();
            let a = hypervolume(&front, &r).unwrap();
            let b = hypervolume(&permuted, &rp).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
