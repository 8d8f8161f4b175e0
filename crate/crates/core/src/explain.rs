//! Per-addition explanations by occlusion: which 4x4 region of the input
//! most changes the addition's activation when zeroed.

use serde::{Deserialize, Serialize};

use crate::level::{action_index, Window, LEVEL_HEIGHT, WINDOW_WIDTH};
use crate::net::{leaky_relu, NetError, Network, Volume};
use crate::scalar::Scalar;
use crate::tiles::{TileId, TileManifest};

/// Side of the occluded square.
pub const SLICE: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    /// Absolute column and row of the explained addition.
    pub x: usize,
    pub y: usize,
    pub tile: TileId,
    /// Window-relative origin of the decisive slice.
    pub x0: usize,
    pub y0: usize,
    /// Column where the window starts, for rendering absolute columns.
    pub origin_x: usize,
    pub delta: f64,
    /// Raw activation of the addition.
    pub confidence: f64,
    pub max_filter: usize,
    pub text: String,
}

/// Largest change at `index` over every slice position, ties to the lowest
/// `(x0, y0)`. Generic over how one occluded activation is computed.
fn scan<T: Scalar>(
    width: usize,
    height: usize,
    base: T,
    mut occluded: impl FnMut(usize, usize) -> Option<T>,
) -> (usize, usize, T) {
    let mut best = (0, 0, T::zero());
    let mut first = true;
    for x0 in 0..=width - SLICE {
        for y0 in 0..=height - SLICE {
            let delta = match occluded(x0, y0) {
                Some(a) => (a - base).abs(),
                None => T::zero(),
            };
            if first || delta > best.2 {
                best = (x0, y0, delta);
                first = false;
            }
        }
    }
    best
}

fn zero_slice<T: Scalar>(input: &mut Volume<T>, x0: usize, y0: usize) {
    for x in x0..x0 + SLICE {
        for y in y0..y0 + SLICE {
            input.cell_mut(x, y).iter_mut().for_each(|v| *v = T::zero());
        }
    }
}

fn slice_is_zero<T: Scalar>(input: &Volume<T>, x0: usize, y0: usize) -> bool {
    (x0..x0 + SLICE).all(|x| (y0..y0 + SLICE).all(|y| input.cell(x, y).iter().all(|&v| v == T::zero())))
}

/// Decisive slice, delta, confidence and first-layer filter for a
/// window-relative `(x, y, tile)`. Only the conv outputs an occlusion can
/// reach are recomputed; results match [`explain_naive`] bit for bit.
pub fn explain<T: Scalar>(
    net: &Network<T>,
    window: &Window,
    x: usize,
    y: usize,
    tile: TileId,
    manifest: &TileManifest,
) -> Result<Explanation, NetError> {
    check_coords(x, y)?;
    let input: Volume<T> = window.to_tensor();
    let trace = net.features(&input)?;
    let r = action_index(x, y, tile);
    let base = net.output_from_features(&trace, r);
    let alpha = net.alpha();
    let layers = net.conv_layers();

    let mut occ_input = input.clone();
    let mut pre = trace.pre.clone();
    let mut post = trace.post.clone();
    let (w, h) = (WINDOW_WIDTH, LEVEL_HEIGHT);
    let (x0, y0, delta) = scan(w, h, base, |x0, y0| {
        if slice_is_zero(&input, x0, y0) {
            return None;
        }
        zero_slice(&mut occ_input, x0, y0);
        // Dirty input columns/rows, widened by each layer's receptive field.
        let mut xs = (x0, x0 + SLICE);
        let mut ys = (y0, y0 + SLICE);
        let mut regions = Vec::with_capacity(layers.len());
        for (l, layer) in layers.iter().enumerate() {
            let before = (layer.size() - 1) / 2;
            let after = layer.size() - 1 - before;
            xs = (xs.0.saturating_sub(after), (xs.1 + before).min(w));
            ys = (ys.0.saturating_sub(after), (ys.1 + before).min(h));
            let (head, tail) = post.split_at_mut(l);
            let layer_in = if l == 0 { &occ_input } else { &head[l - 1] };
            layer.forward_region(layer_in, &mut pre[l], xs.0..xs.1, ys.0..ys.1);
            for cx in xs.0..xs.1 {
                for cy in ys.0..ys.1 {
                    for (o, &z) in tail[0].cell_mut(cx, cy).iter_mut().zip(pre[l].cell(cx, cy)) {
                        *o = leaky_relu(z, alpha);
                    }
                }
            }
            regions.push((xs, ys));
        }
        let a = leaky_relu(net.dense().output(r, post.last().expect("conv layer").data()), alpha);

        // Restore the untouched state for the next slice.
        for cx in x0..x0 + SLICE {
            for cy in y0..y0 + SLICE {
                occ_input.cell_mut(cx, cy).copy_from_slice(input.cell(cx, cy));
            }
        }
        for (l, (xs, ys)) in regions.into_iter().enumerate() {
            for cx in xs.0..xs.1 {
                for cy in ys.0..ys.1 {
                    pre[l].cell_mut(cx, cy).copy_from_slice(trace.pre[l].cell(cx, cy));
                    post[l].cell_mut(cx, cy).copy_from_slice(trace.post[l].cell(cx, cy));
                }
            }
        }
        Some(a)
    });

    Ok(finish(net, &trace.post[0], window, x, y, tile, x0, y0, delta, base, manifest))
}

/// Reference implementation: a full forward pass per slice position.
pub fn explain_naive<T: Scalar>(
    net: &Network<T>,
    window: &Window,
    x: usize,
    y: usize,
    tile: TileId,
    manifest: &TileManifest,
) -> Result<Explanation, NetError> {
    check_coords(x, y)?;
    let input: Volume<T> = window.to_tensor();
    let r = action_index(x, y, tile);
    let trace = net.features(&input)?;
    let base = net.output_from_features(&trace, r);
    let mut failure = None;
    let (x0, y0, delta) = scan(WINDOW_WIDTH, LEVEL_HEIGHT, base, |x0, y0| {
        let mut occ = input.clone();
        zero_slice(&mut occ, x0, y0);
        match net.forward_at(&occ, &[r]) {
            Ok(v) => Some(v[0]),
            Err(e) => {
                failure = Some(e);
                None
            }
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(finish(net, &trace.post[0], window, x, y, tile, x0, y0, delta, base, manifest))
}

fn check_coords(x: usize, y: usize) -> Result<(), NetError> {
    if x >= WINDOW_WIDTH || y >= LEVEL_HEIGHT {
        return Err(NetError::InvalidArgument(format!("({x},{y}) is outside the 40x15 window")));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn finish<T: Scalar>(
    net: &Network<T>,
    first_layer: &Volume<T>,
    window: &Window,
    x: usize,
    y: usize,
    tile: TileId,
    x0: usize,
    y0: usize,
    delta: T,
    base: T,
    manifest: &TileManifest,
) -> Explanation {
    debug_assert_eq!(first_layer.channels(), net.conv_layers()[0].filters());
    let mut max_filter = 0;
    let cell = first_layer.cell(x, y);
    for (k, &v) in cell.iter().enumerate() {
        if v > cell[max_filter] {
            max_filter = k;
        }
    }
    let mut e = Explanation {
        x: window.origin_x + x,
        y,
        tile,
        x0,
        y0,
        origin_x: window.origin_x,
        delta: delta.to_f64().unwrap_or(f64::NAN),
        confidence: base.to_f64().unwrap_or(f64::NAN),
        max_filter,
        text: String::new(),
    };
    e.text = render_text(&e, manifest);
    e
}

/// Fixed template; slice columns are absolute level columns.
pub fn render_text(e: &Explanation, manifest: &TileManifest) -> String {
    let cx = e.origin_x + e.x0;
    format!(
        "Added {} at ({},{}) with confidence {:.2}; most influenced by the region at columns {}-{}, rows {}-{} (filter {}).",
        manifest.name(e.tile),
        e.x,
        e.y,
        e.confidence,
        cx,
        cx + SLICE - 1,
        e.y0,
        e.y0 + SLICE - 1,
        e.max_filter
    )
}
