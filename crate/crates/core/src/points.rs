//! Point-referenced observations: planar location plus response and regressor.

use std::io::Write;

use crate::error::{Result, SgplError};

/// A planar location `[px, py]`.
pub type Coord = [f64; 2];

#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    pub coords: Vec<Coord>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl PointSet {
    pub fn new(coords: Vec<Coord>, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if coords.len() != x.len() || coords.len() != y.len() {
            return Err(SgplError::InvalidInput(format!(
                "length mismatch: {} coords, {} x, {} y",
                coords.len(),
                x.len(),
                y.len()
            )));
        }
        Ok(Self { coords, x, y })
    }

    /// Locations only; `x` and `y` are zero.
    pub fn from_coords(coords: Vec<Coord>) -> Self {
        let n = coords.len();
        Self { coords, x: vec![0.0; n], y: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Subtracts the full-sample means of `x` and `y`, concentrating out an intercept.
    pub fn demeaned(&self) -> PointSet {
        let n = self.len() as f64;
        let mx = self.x.iter().sum::<f64>() / n;
        let my = self.y.iter().sum::<f64>() / n;
        PointSet {
            coords: self.coords.clone(),
            x: self.x.iter().map(|v| v - mx).collect(),
            y: self.y.iter().map(|v| v - my).collect(),
        }
    }

    /// Writes `px,py,x,y` rows with a header.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["px", "py", "x", "y"])?;
        for i in 0..self.len() {
            let [px, py] = self.coords[i];
            wtr.write_record([
                px.to_string(),
                py.to_string(),
                self.x[i].to_string(),
                self.y[i].to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}
