use crate::{GridSpec, Image, TomoError, Vec2};

/// Visits every pixel the segment `src → dst` crosses, with the exact
/// intersection length, in traversal order.
///
/// Incremental Siddon traversal: segment parameter `t ∈ [0, 1]` is clipped to
/// the grid, then advanced from pixel-boundary crossing to crossing; the
/// length attributed to a pixel is the parameter gap times the segment
/// length. Forward and back projection both go through here, so the adjoint
/// pair shares coefficients exactly.
pub(crate) fn for_each_crossing(
    grid: &GridSpec,
    src: Vec2,
    dst: Vec2,
    mut visit: impl FnMut(usize, f64),
) {
    let d = dst - src;
    let len = d.norm();
    if len == 0.0 {
        return;
    }
    let h = grid.half_extent();
    let px = grid.pixel_size;
    let n = grid.n as isize;

    // Clip the parameter range to the grid box.
    let mut t0 = 0.0f64;
    let mut t1 = 1.0f64;
    for (s, delta) in [(src.x, d.x), (src.y, d.y)] {
        if delta != 0.0 {
            let ta = (-h - s) / delta;
            let tb = (h - s) / delta;
            t0 = t0.max(ta.min(tb));
            t1 = t1.min(ta.max(tb));
        } else if s < -h || s > h {
            return; // parallel to this axis and outside the slab
        }
    }
    if t0 >= t1 {
        return;
    }

    let entry = src + d * t0;
    let mut ix = (((entry.x + h) / px).floor() as isize).clamp(0, n - 1);
    let mut iy = (((entry.y + h) / px).floor() as isize).clamp(0, n - 1);

    let step_x: isize = if d.x > 0.0 { 1 } else { -1 };
    let step_y: isize = if d.y > 0.0 { 1 } else { -1 };
    // Parameter of the next boundary crossing on each axis, and the gap
    // between consecutive crossings.
    let (mut tx, dtx) = if d.x != 0.0 {
        let next_plane = if d.x > 0.0 { ix + 1 } else { ix };
        let bx = -h + next_plane as f64 * px;
        ((bx - src.x) / d.x, px / d.x.abs())
    } else {
        (f64::INFINITY, f64::INFINITY)
    };
    let (mut ty, dty) = if d.y != 0.0 {
        let next_plane = if d.y > 0.0 { iy + 1 } else { iy };
        let by = -h + next_plane as f64 * px;
        ((by - src.y) / d.y, px / d.y.abs())
    } else {
        (f64::INFINITY, f64::INFINITY)
    };

    let mut t = t0;
    loop {
        let t_next = tx.min(ty);
        let t_clip = t_next.min(t1);
        let seg = (t_clip - t) * len;
        if seg > 0.0 {
            // Row 0 sits at the top of the image; iy counts from the bottom.
            let row = (n - 1 - iy) as usize;
            visit(row * grid.n + ix as usize, seg);
        }
        if t_next >= t1 {
            break;
        }
        if tx < ty {
            ix += step_x;
            t = tx;
            tx += dtx;
        } else if ty < tx {
            iy += step_y;
            t = ty;
            ty += dty;
        } else {
            // Exact corner crossing: move diagonally.
            ix += step_x;
            iy += step_y;
            t = tx;
            tx += dtx;
            ty += dty;
        }
        if ix < 0 || ix >= n || iy < 0 || iy >= n {
            break;
        }
    }
}

/// Line integral of `image` along the segment `src → dst`.
///
/// Returns `Σ_j ℓ_j · x_j` over the pixels crossed, with `ℓ_j` the exact
/// intersection length; 0 if the segment misses the grid.
pub fn trace_ray(grid: &GridSpec, src: Vec2, dst: Vec2, image: &Image) -> Result<f64, TomoError> {
    if src == dst {
        return Err(TomoError::DegenerateRay { x: src.x, y: src.y });
    }
    if image.grid() != *grid {
        return Err(TomoError::ShapeMismatch {
            what: "trace_ray image grid",
            expected: format!("{grid:?}"),
            got: format!("{:?}", image.grid()),
        });
    }
    let values = image.values();
    let mut acc = 0.0;
    for_each_crossing(grid, src, dst, |idx, len| acc += len * values[idx]);
    Ok(acc)
}
