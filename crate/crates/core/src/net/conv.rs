use rand::Rng;

use crate::scalar::{lit, Scalar};

use super::{glorot_limit, NetError, Volume};

/// Square-kernel 2-D convolution with "same" zero padding.
///
/// Weights are stored kernel-position-major with the filter index innermost:
/// `weights[((dx * size + dy) * in_channels + c) * filters + f]`. For even
/// kernel sizes the extra padding column/row goes after the input, so output
/// `(x, y)` reads inputs `x - (size - 1) / 2 ..= x + size / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer<T> {
    filters: usize,
    size: usize,
    in_channels: usize,
    weights: Vec<T>,
    biases: Vec<T>,
}

/// Parameter gradients of one conv layer, laid out like the layer itself.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvGrad<T> {
    pub weights: Vec<T>,
    pub biases: Vec<T>,
}

impl<T: Scalar> ConvGrad<T> {
    pub fn zeros_like(layer: &ConvLayer<T>) -> Self {
        Self { weights: vec![T::zero(); layer.weights.len()], biases: vec![T::zero(); layer.filters] }
    }
}

impl<T: Scalar> ConvLayer<T> {
    pub fn zeros(filters: usize, size: usize, in_channels: usize) -> Self {
        Self {
            filters,
            size,
            in_channels,
            weights: vec![T::zero(); filters * size * size * in_channels],
            biases: vec![T::zero(); filters],
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn glorot<R: Rng>(filters: usize, size: usize, in_channels: usize, rng: &mut R) -> Self {
        let limit = glorot_limit(size * size * in_channels, size * size * filters);
        let mut layer = Self::zeros(filters, size, in_channels);
        for w in &mut layer.weights {
            *w = lit(rng.gen_range(-limit..=limit));
        }
        layer
    }

    pub fn filters(&self) -> usize {
        self.filters
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn in_channels(&self) -> usize {
        self.in_channels
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [T] {
        &mut self.weights
    }

    pub fn biases(&self) -> &[T] {
        &self.biases
    }

    pub fn biases_mut(&mut self) -> &mut [T] {
        &mut self.biases
    }

    #[inline]
    pub fn weight_index(&self, filter: usize, dx: usize, dy: usize, c: usize) -> usize {
        ((dx * self.size + dy) * self.in_channels + c) * self.filters + filter
    }

    pub fn weight(&self, filter: usize, dx: usize, dy: usize, c: usize) -> T {
        self.weights[self.weight_index(filter, dx, dy, c)]
    }

    pub fn set_weight(&mut self, filter: usize, dx: usize, dy: usize, c: usize, v: T) {
        let i = self.weight_index(filter, dx, dy, c);
        self.weights[i] = v;
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.biases.len()
    }

    #[inline]
    fn pad(&self) -> isize {
        ((self.size - 1) / 2) as isize
    }

    fn check_input(&self, input: &Volume<T>) -> Result<(), NetError> {
        if input.channels() != self.in_channels {
            return Err(NetError::ShapeMismatch {
                expected: format!("{} input channels", self.in_channels),
                got: format!("{}", input.channels()),
            });
        }
        Ok(())
    }

    /// Pre-activation output (cross-correlation plus bias).
    pub fn forward(&self, input: &Volume<T>) -> Result<Volume<T>, NetError> {
        self.check_input(input)?;
        let mut out = Volume::zeros(input.width(), input.height(), self.filters);
        self.forward_region(input, &mut out, 0..input.width(), 0..input.height());
        Ok(out)
    }

    /// Recomputes output positions inside the given ranges only. Each output
    /// value is produced by the same sequence of operations as in
    /// [`ConvLayer::forward`].
    pub fn forward_region(
        &self,
        input: &Volume<T>,
        out: &mut Volume<T>,
        xs: std::ops::Range<usize>,
        ys: std::ops::Range<usize>,
    ) {
        for x in xs {
            for y in ys.clone() {
                self.compute_at(input, x, y, out.cell_mut(x, y));
            }
        }
    }

    #[inline]
    fn compute_at(&self, input: &Volume<T>, x: usize, y: usize, acc: &mut [T]) {
        acc.copy_from_slice(&self.biases);
        let (w, h) = (input.width() as isize, input.height() as isize);
        let pad = self.pad();
        let f = self.filters;
        for dx in 0..self.size {
            let ix = x as isize + dx as isize - pad;
            if ix < 0 || ix >= w {
                continue;
            }
            for dy in 0..self.size {
                let iy = y as isize + dy as isize - pad;
                if iy < 0 || iy >= h {
                    continue;
                }
                let inp = input.cell(ix as usize, iy as usize);
                let base = (dx * self.size + dy) * self.in_channels * f;
                for (c, &v) in inp.iter().enumerate() {
                    // Zero inputs contribute nothing; one-hot inputs are mostly zero.
                    if v == T::zero() {
                        continue;
                    }
                    let ws = &self.weights[base + c * f..base + (c + 1) * f];
                    for (a, &wv) in acc.iter_mut().zip(ws) {
                        *a = *a + wv * v;
                    }
                }
            }
        }
    }

    /// Accumulates parameter gradients given the layer input and the
    /// gradient with respect to the pre-activation output. Returns the
    /// gradient with respect to the input when `want_input_grad` is set.
    pub fn backward(
        &self,
        input: &Volume<T>,
        d_out: &Volume<T>,
        grad: &mut ConvGrad<T>,
        want_input_grad: bool,
    ) -> Option<Volume<T>> {
        let (w, h) = (input.width() as isize, input.height() as isize);
        let pad = self.pad();
        let f = self.filters;
        let mut d_in = want_input_grad.then(|| Volume::zeros(input.width(), input.height(), self.in_channels));
        for x in 0..input.width() {
            for y in 0..input.height() {
                let g = d_out.cell(x, y);
                if g.iter().all(|&v| v == T::zero()) {
                    continue;
                }
                for (b, &gv) in grad.biases.iter_mut().zip(g) {
                    *b = *b + gv;
                }
                for dx in 0..self.size {
                    let ix = x as isize + dx as isize - pad;
                    if ix < 0 || ix >= w {
                        continue;
                    }
                    for dy in 0..self.size {
                        let iy = y as isize + dy as isize - pad;
                        if iy < 0 || iy >= h {
                            continue;
                        }
                        let (ixu, iyu) = (ix as usize, iy as usize);
                        let base = (dx * self.size + dy) * self.in_channels * f;
                        for c in 0..self.in_channels {
                            let v = input.get(ixu, iyu, c);
                            let lo = base + c * f;
                            if v != T::zero() {
                                for (gw, &gv) in grad.weights[lo..lo + f].iter_mut().zip(g) {
                                    *gw = *gw + gv * v;
                                }
                            }
                            if let Some(d_in) = d_in.as_mut() {
                                let ws = &self.weights[lo..lo + f];
                                let mut s = T::zero();
                                for (&wv, &gv) in ws.iter().zip(g) {
                                    s = s + wv * gv;
                                }
                                let cell = d_in.cell_mut(ixu, iyu);
                                cell[c] = cell[c] + s;
                            }
                        }
                    }
                }
            }
        }
        d_in
    }
}
