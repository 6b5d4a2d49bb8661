//! Iterative max-pooling feature inpainting: forward pass with exact source
//! provenance, a brute-force enumeration oracle, the adjoint backward pass,
//! and label-domain nearest-neighbor inpainting built on top of it.

use crate::error::{Error, Result};
use crate::label::LabelMap;
use crate::mask::{dilate_background, erode_background, ForegroundMask};
use crate::tensor::{pool_plane, PoolMode, Tensor};

/// How the mask pre-step treats boundary pixels before inpainting starts.
///
/// `ErodeBackground` treats the band of background pixels adjacent to
/// foreground as foreground too, so features contaminated at region borders
/// get re-filled from deeper background. `DilateBackground` is the literal
/// max-pooling of a 1-is-background mask, kept selectable for comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryMode {
    ErodeBackground,
    DilateBackground,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpiOptions {
    pub boundary_radius: usize,
    pub boundary_mode: BoundaryMode,
    pub pool_mode: PoolMode,
    /// Optional cap on pooling iterations; pixels not reached by the cap stay
    /// at zero with no recorded source.
    pub max_iterations: Option<usize>,
}

impl Default for MpiOptions {
    fn default() -> Self {
        MpiOptions {
            boundary_radius: 1,
            boundary_mode: BoundaryMode::ErodeBackground,
            pool_mode: PoolMode::ZeroFill,
            max_iterations: None,
        }
    }
}

impl MpiOptions {
    /// No boundary pre-step, zero-fill pooling.
    pub fn plain() -> Self {
        MpiOptions { boundary_radius: 0, ..Default::default() }
    }

    pub fn with_pool_mode(mut self, mode: PoolMode) -> Self {
        self.pool_mode = mode;
        self
    }

    pub fn with_boundary_radius(mut self, radius: usize) -> Self {
        self.boundary_radius = radius;
        self
    }

    pub(crate) fn effective_mask(&self, m: &ForegroundMask) -> ForegroundMask {
        match self.boundary_mode {
            BoundaryMode::ErodeBackground => erode_background(m, self.boundary_radius),
            BoundaryMode::DilateBackground => dilate_background(m, self.boundary_radius),
        }
    }
}

/// Where a filled output value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceEntry {
    /// Post-pre-step background pixel; the input value passes through.
    Identity,
    /// Value copied from this background pixel's coordinate.
    Source(usize, usize),
    /// A propagated zero from the zero-filled foreground won the max chain
    /// (only possible in `ZeroFill` mode) or the iteration cap cut the fill off.
    NoSource,
}

/// Per-(channel, pixel) record of the background source selected by the max
/// chain, plus the effective mask after the boundary pre-step.
#[derive(Debug, Clone)]
pub struct Provenance {
    channels: usize,
    height: usize,
    width: usize,
    entries: Vec<SourceEntry>,
    effective_mask: ForegroundMask,
    iterations: usize,
}

impl Provenance {
    pub fn get(&self, c: usize, y: usize, x: usize) -> SourceEntry {
        self.entries[(c * self.height + y) * self.width + x]
    }

    pub fn effective_mask(&self) -> &ForegroundMask {
        &self.effective_mask
    }

    /// Number of pooling iterations the forward pass ran.
    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }
}

/// Inpaints the foreground region of `f_raw` by iterated 3x3 max-pooling of
/// the background-only feature map, recording per pixel and channel which
/// background value each fill came from.
pub fn mpi_forward(f_raw: &Tensor, m: &ForegroundMask, opts: &MpiOptions) -> Result<(Tensor, Provenance)> {
    let (c, h, w) = f_raw.dims3();
    check_mask_shape(h, w, m, "mpi_forward")?;
    let (out, prov) = forward_generic(f_raw.data(), c, h, w, m, opts)?;
    Ok((Tensor::new(vec![c, h, w], out)?, prov))
}

pub(crate) fn forward_generic<T: num_traits::Float>(
    data: &[T],
    c: usize,
    h: usize,
    w: usize,
    m: &ForegroundMask,
    opts: &MpiOptions,
) -> Result<(Vec<T>, Provenance)> {
    let m_eff = opts.effective_mask(m);
    if m_eff.all_foreground() {
        return Err(Error::AllForeground);
    }

    let plane = h * w;
    // Background-only copy: foreground positions become exactly zero.
    let mut f_bg: Vec<T> = data.to_vec();
    for ci in 0..c {
        for i in 0..plane {
            if m_eff.bits()[i] == 0 {
                f_bg[ci * plane + i] = T::zero();
            }
        }
    }

    // Working origin of the value currently held at each position.
    let mut origin: Vec<Option<(usize, usize)>> = Vec::with_capacity(c * plane);
    for _ in 0..c {
        for i in 0..plane {
            let y = i / w;
            let x = i % w;
            origin.push(if m_eff.bits()[i] == 1 { Some((y, x)) } else { None });
        }
    }

    let mut patch = vec![T::zero(); c * plane];
    let mut frozen: Vec<SourceEntry> = vec![SourceEntry::NoSource; c * plane];
    let mut covered = m_eff.clone();
    let mut iterations = 0usize;

    while !covered.bits().iter().all(|&b| b == 1) {
        if let Some(cap) = opts.max_iterations {
            if iterations >= cap {
                break;
            }
        }
        let valid_bits = match opts.pool_mode {
            PoolMode::MaskedSentinel => Some(covered.bits()),
            PoolMode::ZeroFill => None,
        };
        let mut pooled = vec![T::zero(); c * plane];
        let mut new_origin = vec![None; c * plane];
        for ci in 0..c {
            let (p, arg) = pool_plane(&f_bg[ci * plane..(ci + 1) * plane], h, w, valid_bits);
            pooled[ci * plane..(ci + 1) * plane].copy_from_slice(&p);
            for (i, a) in arg.iter().enumerate() {
                new_origin[ci * plane + i] = a.and_then(|(qy, qx)| origin[ci * plane + qy * w + qx]);
            }
        }
        let new_covered = dilate_background(&covered, 1);
        for i in 0..plane {
            if new_covered.bits()[i] == 1 && covered.bits()[i] == 0 {
                for ci in 0..c {
                    let idx = ci * plane + i;
                    patch[idx] = pooled[idx];
                    frozen[idx] = match new_origin[idx] {
                        Some((qy, qx)) => SourceEntry::Source(qy, qx),
                        None => SourceEntry::NoSource,
                    };
                }
            }
        }
        f_bg = pooled;
        origin = new_origin;
        covered = new_covered;
        iterations += 1;
    }

    // F_inpainted = F_raw * M + F_patch, with M the post-pre-step mask.
    let mut out = vec![T::zero(); c * plane];
    for ci in 0..c {
        for i in 0..plane {
            let idx = ci * plane + i;
            if m_eff.bits()[i] == 1 {
                out[idx] = data[idx];
                frozen[idx] = SourceEntry::Identity;
            } else {
                out[idx] = patch[idx];
            }
        }
    }

    Ok((
        out,
        Provenance {
            channels: c,
            height: h,
            width: w,
            entries: frozen,
            effective_mask: m_eff,
            iterations,
        },
    ))
}

/// Closed-form reference for [`mpi_forward`], computed by explicit
/// enumeration with no pooling: the fill at a foreground pixel is the max of
/// the background values within the Chebyshev ball whose radius is the
/// distance to the nearest background pixel (clamped at zero in `ZeroFill`
/// mode, where the zeroed foreground can dominate).
pub fn mpi_oracle(f_raw: &Tensor, m: &ForegroundMask, opts: &MpiOptions) -> Result<Tensor> {
    let (c, h, w) = f_raw.dims3();
    check_mask_shape(h, w, m, "mpi_oracle")?;
    let m_eff = opts.effective_mask(m);
    if m_eff.all_foreground() {
        return Err(Error::AllForeground);
    }
    let cheb = |a: (usize, usize), b: (usize, usize)| -> usize {
        a.0.abs_diff(b.0).max(a.1.abs_diff(b.1))
    };
    let background: Vec<(usize, usize)> = (0..h)
        .flat_map(|y| (0..w).map(move |x| (y, x)))
        .filter(|&(y, x)| m_eff.get(y, x) == 1)
        .collect();
    let mut out = Tensor::zeros(vec![c, h, w]);
    for y in 0..h {
        for x in 0..w {
            if m_eff.get(y, x) == 1 {
                for ci in 0..c {
                    out.set3(ci, y, x, f_raw.get3(ci, y, x));
                }
                continue;
            }
            let k = background.iter().map(|&q| cheb((y, x), q)).min().expect("nonempty background");
            if let Some(cap) = opts.max_iterations {
                if k > cap {
                    continue; // unreachable under the cap; stays zero
                }
            }
            for ci in 0..c {
                let mut fill = f32::NEG_INFINITY;
                for &q in &background {
                    if cheb((y, x), q) <= k {
                        fill = fill.max(f_raw.get3(ci, q.0, q.1));
                    }
                }
                if opts.pool_mode == PoolMode::ZeroFill {
                    fill = fill.max(0.0);
                }
                out.set3(ci, y, x, fill);
            }
        }
    }
    Ok(out)
}

/// Routes output gradients back to the background pixels selected by the
/// forward max chain. Foreground positions of the input receive zero
/// gradient; `NoSource` fills drop theirs.
pub fn mpi_backward(prov: &Provenance, grad_out: &Tensor) -> Result<Tensor> {
    let (c, h, w) = prov.dims();
    let got = grad_out.shape().to_vec();
    if got != [c, h, w] {
        return Err(Error::ShapeMismatch { context: "mpi_backward", expected: vec![c, h, w], got });
    }
    let data = backward_generic(prov, grad_out.data());
    Tensor::new(vec![c, h, w], data)
}

pub(crate) fn backward_generic<T: num_traits::Float>(prov: &Provenance, grad_out: &[T]) -> Vec<T> {
    let (c, h, w) = prov.dims();
    let plane = h * w;
    let mut grad_in = vec![T::zero(); c * plane];
    for ci in 0..c {
        for i in 0..plane {
            let idx = ci * plane + i;
            match prov.entries[idx] {
                SourceEntry::Identity => grad_in[idx] = grad_in[idx] + grad_out[idx],
                SourceEntry::Source(qy, qx) => {
                    let q = ci * plane + qy * w + qx;
                    grad_in[q] = grad_in[q] + grad_out[idx];
                }
                SourceEntry::NoSource => {}
            }
        }
    }
    grad_in
}

/// Nearest-neighbor label inpainting: one-hot encodes the background classes,
/// inpaints each plane, and takes the per-pixel argmax (ties to the lowest
/// class id). Pixels that are background in the input mask keep their label.
pub fn nn_inpaint_labels(
    labels: &LabelMap,
    m: &ForegroundMask,
    opts: &MpiOptions,
    num_classes: usize,
) -> Result<LabelMap> {
    let (h, w) = (labels.height(), labels.width());
    check_mask_shape(h, w, m, "nn_inpaint_labels")?;
    if num_classes == 0 || num_classes > 255 {
        return Err(Error::InvalidConfig(format!("num_classes {num_classes} out of range")));
    }
    let mut onehot = Tensor::zeros(vec![num_classes, h, w]);
    for y in 0..h {
        for x in 0..w {
            let id = labels.get(y, x) as usize;
            if id < num_classes {
                onehot.set3(id, y, x, 1.0);
            }
        }
    }
    let (filled, _) = mpi_forward(&onehot, m, opts)?;
    let mut out = labels.clone();
    for y in 0..h {
        for x in 0..w {
            if m.get(y, x) == 1 {
                continue;
            }
            let mut best = 0usize;
            let mut best_v = filled.get3(0, y, x);
            for ci in 1..num_classes {
                let v = filled.get3(ci, y, x);
                if v > best_v {
                    best_v = v;
                    best = ci;
                }
            }
            out.set(y, x, best as u8);
        }
    }
    Ok(out)
}

fn check_mask_shape(h: usize, w: usize, m: &ForegroundMask, context: &'static str) -> Result<()> {
    if (m.height(), m.width()) != (h, w) {
        return Err(Error::ShapeMismatch {
            context,
            expected: vec![h, w],
            got: vec![m.height(), m.width()],
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label::FOREGROUND_ID;

    fn ramp3x3() -> Tensor {
        Tensor::from_planes(&[vec![
            vec![1.0, 2.0, 3.0],
            vec![4.0, 5.0, 6.0],
            vec![7.0, 8.0, 9.0],
        ]])
    }

    fn mask_with_foreground(h: usize, w: usize, fg: &[(usize, usize)]) -> ForegroundMask {
        let mut m = ForegroundMask::all_background(h, w);
        for &(y, x) in fg {
            m.set(y, x, 0);
        }
        m
    }

    #[test]
    fn center_hole_filled_from_best_neighbor() {
        let m = mask_with_foreground(3, 3, &[(1, 1)]);
        let (out, prov) = mpi_forward(&ramp3x3(), &m, &MpiOptions::plain()).unwrap();
        let expect = Tensor::from_planes(&[vec![
            vec![1.0, 2.0, 3.0],
            vec![4.0, 9.0, 6.0],
            vec![7.0, 8.0, 9.0],
        ]]);
        assert_eq!(out, expect);
        assert_eq!(prov.get(0, 1, 1), SourceEntry::Source(2, 2));
        assert_eq!(prov.get(0, 0, 0), SourceEntry::Identity);
        assert_eq!(prov.iterations(), 1);
    }

    #[test]
    fn all_background_is_identity() {
        let t = ramp3x3();
        let m = ForegroundMask::all_background(3, 3);
        let (out, prov) = mpi_forward(&t, &m, &MpiOptions::plain()).unwrap();
        assert_eq!(out, t);
        assert_eq!(prov.iterations(), 0);
        for y in 0..3 {
            for x in 0..3 {
                assert_eq!(prov.get(0, y, x), SourceEntry::Identity);
            }
        }
    }

    #[test]
    fn two_pixel_hole() {
        let m = mask_with_foreground(3, 3, &[(0, 0), (0, 1)]);
        let (out, _) = mpi_forward(&ramp3x3(), &m, &MpiOptions::plain()).unwrap();
        let expect = Tensor::from_planes(&[vec![
            vec![5.0, 6.0, 3.0],
            vec![4.0, 5.0, 6.0],
            vec![7.0, 8.0, 9.0],
        ]]);
        assert_eq!(out, expect);
        let oracle = mpi_oracle(&ramp3x3(), &m, &MpiOptions::plain()).unwrap();
        assert_eq!(out, oracle);
    }

    #[test]
    fn oracle_matches_forward_on_spec_examples() {
        for fg in [vec![(1usize, 1usize)], vec![(0, 0), (0, 1)]] {
            let m = mask_with_foreground(3, 3, &fg);
            let (out, _) = mpi_forward(&ramp3x3(), &m, &MpiOptions::plain()).unwrap();
            let oracle = mpi_oracle(&ramp3x3(), &m, &MpiOptions::plain()).unwrap();
            assert_eq!(out, oracle);
        }
    }

    #[test]
    fn constant_background_fills_constant() {
        let mut t = Tensor::filled(vec![2, 4, 4], 2.5);
        t.set3(0, 2, 2, -7.0); // foreground value, must not leak
        t.set3(1, 2, 2, 99.0);
        let m = mask_with_foreground(4, 4, &[(2, 2)]);
        let (out, _) = mpi_forward(&t, &m, &MpiOptions::plain()).unwrap();
        assert_eq!(out.get3(0, 2, 2), 2.5);
        assert_eq!(out.get3(1, 2, 2), 2.5);
    }

    #[test]
    fn zero_fill_vs_masked_sentinel_on_negative_features() {
        let t = Tensor::from_planes(&[vec![
            vec![-3.0, -1.0, -4.0],
            vec![-2.0, -5.0, -6.0],
            vec![-8.0, -7.0, -9.0],
        ]]);
        let m = mask_with_foreground(3, 3, &[(1, 1)]);
        let zero = MpiOptions::plain();
        let (out_zero, prov) = mpi_forward(&t, &m, &zero).unwrap();
        assert_eq!(out_zero.get3(0, 1, 1), 0.0);
        assert_eq!(prov.get(0, 1, 1), SourceEntry::NoSource);

        let sentinel = MpiOptions::plain().with_pool_mode(PoolMode::MaskedSentinel);
        let (out_masked, prov) = mpi_forward(&t, &m, &sentinel).unwrap();
        assert_eq!(out_masked.get3(0, 1, 1), -1.0);
        assert_eq!(prov.get(0, 1, 1), SourceEntry::Source(0, 1));

        for opts in [zero, sentinel] {
            assert_eq!(
                mpi_forward(&t, &m, &opts).unwrap().0,
                mpi_oracle(&t, &m, &opts).unwrap()
            );
        }
    }

    #[test]
    fn all_foreground_after_pre_step_errors() {
        let t = ramp3x3();
        let m = ForegroundMask::from_fn(3, 3, |_, _| 0);
        assert!(matches!(mpi_forward(&t, &m, &MpiOptions::plain()), Err(Error::AllForeground)));
        // erosion can empty the background too
        let m = mask_with_foreground(3, 3, &[(1, 1)]);
        let opts = MpiOptions { boundary_radius: 2, ..Default::default() };
        assert!(matches!(mpi_forward(&t, &m, &opts), Err(Error::AllForeground)));
        assert!(matches!(mpi_oracle(&t, &m, &opts), Err(Error::AllForeground)));
    }

    #[test]
    fn erosion_refills_boundary_band() {
        // With radius 1, background pixels adjacent to the hole are refilled
        // from deeper background rather than passed through.
        let t = Tensor::from_planes(&[vec![
            vec![1.0, 1.0, 1.0, 1.0, 1.0],
            vec![1.0, 9.0, 9.0, 9.0, 1.0],
            vec![1.0, 9.0, 0.5, 9.0, 1.0],
            vec![1.0, 9.0, 9.0, 9.0, 1.0],
            vec![1.0, 1.0, 1.0, 1.0, 1.0],
        ]]);
        let m = mask_with_foreground(5, 5, &[(2, 2)]);
        let opts = MpiOptions::default(); // radius 1 erosion
        let (out, prov) = mpi_forward(&t, &m, &opts).unwrap();
        // the contaminated 9.0 ring is treated as foreground
        assert_eq!(prov.effective_mask().count_foreground(), 9);
        for y in 1..4 {
            for x in 1..4 {
                assert_eq!(out.get3(0, y, x), 1.0, "({y},{x})");
            }
        }
        assert_eq!(out, mpi_oracle(&t, &m, &opts).unwrap());
    }

    #[test]
    fn literal_dilate_variant_shrinks_the_hole() {
        let t = ramp3x3();
        let m = mask_with_foreground(3, 3, &[(1, 1)]);
        let opts = MpiOptions {
            boundary_mode: BoundaryMode::DilateBackground,
            ..Default::default()
        };
        // dilating the background covers the hole entirely: identity
        let (out, prov) = mpi_forward(&t, &m, &opts).unwrap();
        assert_eq!(out, t);
        assert_eq!(prov.iterations(), 0);
    }

    #[test]
    fn backward_identity_on_all_background() {
        let t = ramp3x3();
        let m = ForegroundMask::all_background(3, 3);
        let (_, prov) = mpi_forward(&t, &m, &MpiOptions::plain()).unwrap();
        let grad_out = Tensor::from_planes(&[vec![
            vec![0.1, 0.2, 0.3],
            vec![0.4, 0.5, 0.6],
            vec![0.7, 0.8, 0.9],
        ]]);
        assert_eq!(mpi_backward(&prov, &grad_out).unwrap(), grad_out);
    }

    #[test]
    fn backward_routes_to_source() {
        let m = mask_with_foreground(3, 3, &[(1, 1)]);
        let (_, prov) = mpi_forward(&ramp3x3(), &m, &MpiOptions::plain()).unwrap();
        let mut grad_out = Tensor::zeros(vec![1, 3, 3]);
        grad_out.set3(0, 1, 1, 1.0);
        let grad_in = mpi_backward(&prov, &grad_out).unwrap();
        let mut expect = Tensor::zeros(vec![1, 3, 3]);
        expect.set3(0, 2, 2, 1.0);
        assert_eq!(grad_in, expect);
    }

    #[test]
    fn backward_shape_mismatch() {
        let m = ForegroundMask::all_background(3, 3);
        let (_, prov) = mpi_forward(&ramp3x3(), &m, &MpiOptions::plain()).unwrap();
        let grad_out = Tensor::zeros(vec![1, 2, 2]);
        assert!(mpi_backward(&prov, &grad_out).is_err());
    }

    #[test]
    fn iteration_cap_leaves_far_pixels_unfilled() {
        let t = Tensor::filled(vec![1, 1, 5], 4.0);
        let m = ForegroundMask::from_rows(&[vec![1, 0, 0, 0, 0]]).unwrap();
        let opts = MpiOptions { max_iterations: Some(2), ..MpiOptions::plain() };
        let (out, prov) = mpi_forward(&t, &m, &opts).unwrap();
        assert_eq!(out.data(), &[4.0, 4.0, 4.0, 0.0, 0.0]);
        assert_eq!(prov.get(0, 0, 4), SourceEntry::NoSource);
        assert_eq!(out, mpi_oracle(&t, &m, &opts).unwrap());
    }

    #[test]
    fn nn_inpaint_tie_breaks_to_lowest_class() {
        // [road, FG, sidewalk]: both neighbors at distance 1 -> road wins
        let labels = LabelMap::from_rows(&[vec![0, FOREGROUND_ID, 1]]).unwrap();
        let m = ForegroundMask::from_rows(&[vec![1, 0, 1]]).unwrap();
        let out = nn_inpaint_labels(&labels, &m, &MpiOptions::plain(), 3).unwrap();
        assert_eq!(out.ids(), &[0, 0, 1]);
    }

    #[test]
    fn nn_inpaint_no_foreground_unchanged() {
        let labels = LabelMap::from_rows(&[vec![2, 1], vec![0, 1]]).unwrap();
        let m = ForegroundMask::all_background(2, 2);
        let out = nn_inpaint_labels(&labels, &m, &MpiOptions::default(), 3).unwrap();
        assert_eq!(out, labels);
    }

    #[test]
    fn channel_permutation_equivariance() {
        let t = Tensor::new(
            vec![2, 3, 3],
            (0..18).map(|i| ((i * 37) % 11) as f32 - 3.0).collect(),
        )
        .unwrap();
        let swapped = {
            let mut d = t.data()[9..18].to_vec();
            d.extend_from_slice(&t.data()[0..9]);
            Tensor::new(vec![2, 3, 3], d).unwrap()
        };
        let m = mask_with_foreground(3, 3, &[(0, 2), (1, 1)]);
        let opts = MpiOptions::plain().with_pool_mode(PoolMode::MaskedSentinel);
        let (a, _) = mpi_forward(&t, &m, &opts).unwrap();
        let (b, _) = mpi_forward(&swapped, &m, &opts).unwrap();
        assert_eq!(&a.data()[0..9], &b.data()[9..18]);
        assert_eq!(&a.data()[9..18], &b.data()[0..9]);
    }
}
