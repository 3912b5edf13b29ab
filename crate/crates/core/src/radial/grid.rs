use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_PANELS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grading {
    Uniform,
    /// `r = x (1 + x) / 2` on a uniform `x` grid: panels near the origin are
    /// half as wide as those near the boundary.
    GradedOrigin,
    /// Nodes supplied by the caller.
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    grading: Grading,
}

impl RadialGrid {
    /// `m` panels, `m + 1` nodes from 0 to 1.
    pub fn new(m: usize, grading: Grading) -> Result<Self> {
        if m < MIN_PANELS {
            return Err(Error::InvalidInput(format!(
                "grid needs at least {MIN_PANELS} panels, got {m}"
            )));
        }
        let nodes = (0..=m)
            .map(|i| {
                let x = i as f64 / m as f64;
                match grading {
                    Grading::Uniform | Grading::Custom => x,
                    Grading::GradedOrigin => 0.5 * x * (1.0 + x),
                }
            })
            .collect();
        Ok(Self { nodes, grading })
    }

    pub fn uniform(m: usize) -> Result<Self> {
        Self::new(m, Grading::Uniform)
    }

    pub fn graded(m: usize) -> Result<Self> {
        Self::new(m, Grading::GradedOrigin)
    }

    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < MIN_PANELS + 1 {
            return Err(Error::InvalidInput(format!(
                "grid needs at least {} nodes, got {}",
                MIN_PANELS + 1,
                nodes.len()
            )));
        }
        if nodes[0] != 0.0 || *nodes.last().unwrap() != 1.0 {
            return Err(Error::InvalidInput("grid must start at 0 and end at 1".into()));
        }
        if let Some(i) = nodes.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput(format!(
                "grid nodes not strictly increasing at index {}",
                i + 1
            )));
        }
        Ok(Self {
            nodes,
            grading: Grading::Custom,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn grading(&self) -> Grading {
        self.grading
    }

    /// Number of panels.
    pub fn panels(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn width(&self, k: usize) -> f64 {
        self.nodes[k + 1] - self.nodes[k]
    }

    /// Panel containing `r`.
    pub fn locate(&self, r: f64) -> usize {
        let m = self.panels();
        match self.nodes.binary_search_by(|x| x.partial_cmp(&r).unwrap()) {
            Ok(i) => i.min(m - 1),
            Err(i) => i.saturating_sub(1).min(m - 1),
        }
    }
}
