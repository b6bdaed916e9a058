//! Batched stage rendering shared by the two-stage model and the single-stage variant.

use ndarray::Array2;
use num_complex::Complex64;

use super::layer::sigmoid;
use super::stage::{StageActivations, StageNetwork};
use crate::encoding::{InputEncoding, SceneBounds};
use crate::geometry::{Direction3, Point3, RayTemplate};

/// One stage render: the bundle origin, the emitter the viewing direction
/// is measured from, and optional extra conditioning position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct StageQuery {
    pub origin: Point3,
    pub emitter: Point3,
    pub extra: Option<Point3>,
}

/// Forward record of a batch of stage renders.
pub(crate) struct StageRenderBatch {
    pub acts: StageActivations,
    /// Complex rendered signal per query.
    pub sums: Vec<Complex64>,
    pub voxels_per_query: usize,
}

/// Viewing direction from `emitter` to `voxel`, falling back to the ray direction when they coincide.
pub(crate) fn view_direction(emitter: Point3, voxel: Point3, ray: Direction3) -> Direction3 {
    Direction3::between(emitter, voxel).unwrap_or(ray)
}

pub(crate) fn render_batch(
    net: &StageNetwork,
    template: &RayTemplate,
    encoding: &InputEncoding,
    bounds: &SceneBounds,
    queries: &[StageQuery],
) -> StageRenderBatch {
    let k = template.len();
    let rows = queries.len() * k;
    let pos_len = encoding.position_len();
    let dir_len = encoding.direction_len();
    let cond_len = net.conditioning_len() - pos_len;

    let mut positions = Array2::zeros((rows, pos_len));
    let mut conditioning = Array2::zeros((rows, cond_len));
    let mut extra_buf = vec![0.0; pos_len];
    for (q, query) in queries.iter().enumerate() {
        let extra = query.extra.map(|p| {
            encoding.encode_position(bounds.normalize_unchecked(p), &mut extra_buf);
            &extra_buf[..]
        });
        for v in 0..k {
            let row = q * k + v;
            let voxel = template.voxel(query.origin, v);
            let mut pos_row = positions.row_mut(row);
            encoding.encode_position(
                bounds.normalize_unchecked(voxel),
                pos_row.as_slice_mut().expect("row-major"),
            );
            let mut cond_row = conditioning.row_mut(row);
            let cond = cond_row.as_slice_mut().expect("row-major");
            let dir = view_direction(query.emitter, voxel, template.direction_of(v));
            encoding.encode_direction(dir, &mut cond[..dir_len]);
            if let Some(extra) = extra {
                cond[dir_len..].copy_from_slice(extra);
            }
        }
    }

    let acts = net.forward_batch(positions, conditioning.view());
    let mut sums = vec![Complex64::new(0.0, 0.0); queries.len()];
    for (q, sum) in sums.iter_mut().enumerate() {
        for row in q * k..(q + 1) * k {
            let s = acts.signal(row);
            let t = acts.transmission(row);
            *sum += Complex64::from_polar(s.amplitude * t.amplitude, s.phase + t.phase);
        }
    }
    StageRenderBatch {
        acts,
        sums,
        voxels_per_query: k,
    }
}

/// Backpropagates `d loss / d (Re, Im)` of each rendered sum into `grad`.
pub(crate) fn backward_batch(
    net: &StageNetwork,
    batch: &StageRenderBatch,
    d_sums: &[Complex64],
    grad: &mut StageNetwork,
) {
    let rows = batch.acts.rows();
    let mut d_t = Array2::zeros((rows, 2));
    let mut d_s = Array2::zeros((rows, 2));
    let s_raw = &batch.acts.signal_raw;
    let t_raw = &batch.acts.transmission_raw;
    for (q, g) in d_sums.iter().enumerate() {
        if g.re == 0.0 && g.im == 0.0 {
            continue;
        }
        for row in q * batch.voxels_per_query..(q + 1) * batch.voxels_per_query {
            let s = batch.acts.signal(row);
            let t = batch.acts.transmission(row);
            let amp = s.amplitude * t.amplitude;
            let (sin, cos) = (s.phase + t.phase).sin_cos();
            let d_amp = g.re * cos + g.im * sin;
            let d_phase = amp * (g.im * cos - g.re * sin);
            d_s[[row, 0]] = d_amp * t.amplitude * sigmoid(s_raw[[row, 0]]);
            d_t[[row, 0]] = d_amp * s.amplitude * sigmoid(t_raw[[row, 0]]);
            d_s[[row, 1]] = d_phase;
            d_t[[row, 1]] = d_phase;
        }
    }
    net.backward_batch(&batch.acts, &d_t, &d_s, grad);
}
