//! Minimal row-major 2-D buffer shared by score maps and masks.

use crate::error::{EvalError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    data: Vec<T>,
    height: usize,
    width: usize,
}

impl<T> Grid<T> {
    pub fn from_vec(data: Vec<T>, height: usize, width: usize) -> Result<Self> {
        if data.len() != height * width {
            return Err(EvalError::ShapeMismatch {
                left: (height, width),
                right: (data.len(), 1),
            });
        }
        Ok(Self {
            data,
            height,
            width,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> &T {
        &self.data[row * self.width + col]
    }
}

impl<T: Clone> Grid<T> {
    pub fn filled(value: T, height: usize, width: usize) -> Self {
        Self {
            data: vec![value; height * width],
            height,
            width,
        }
    }

    pub fn set(&mut self, row: usize, col: usize, value: T) {
        self.data[row * self.width + col] = value;
    }
}
