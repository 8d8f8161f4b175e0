use crate::scalar::Scalar;

/// Dense `width x height x channels` array, channel-innermost.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume<T> {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<T>,
}

impl<T: Scalar> Volume<T> {
    pub fn zeros(width: usize, height: usize, channels: usize) -> Self {
        Self { width, height, channels, data: vec![T::zero(); width * height * channels] }
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: T) -> Self {
        Self { width, height, channels, data: vec![value; width * height * channels] }
    }

    /// Wraps `data`, which must hold exactly `width * height * channels` values.
    pub fn from_vec(width: usize, height: usize, channels: usize, data: Vec<T>) -> Option<Self> {
        (data.len() == width * height * channels).then_some(Self { width, height, channels, data })
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.width, self.height, self.channels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, c: usize) -> usize {
        (x * self.height + y) * self.channels + c
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> T {
        self.data[self.index(x, y, c)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: T) {
        let i = self.index(x, y, c);
        self.data[i] = v;
    }

    /// All channels at one spatial position.
    #[inline]
    pub fn cell(&self, x: usize, y: usize) -> &[T] {
        let start = (x * self.height + y) * self.channels;
        &self.data[start..start + self.channels]
    }

    #[inline]
    pub fn cell_mut(&mut self, x: usize, y: usize) -> &mut [T] {
        let start = (x * self.height + y) * self.channels;
        &mut self.data[start..start + self.channels]
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self { data: self.data.iter().map(|&v| f(v)).collect(), ..*self }
    }
}
