use crate::delay::DelayBank;
use crate::error::{Error, Result};
use crate::flow::FlowExponents;
use crate::grid::Grid;
use crate::network::{EdgeCoefficients, Network};

/// A network with coefficients, delays and a spatial grid.
#[derive(Debug, Clone)]
pub struct System {
    pub network: Network,
    pub coeffs: EdgeCoefficients,
    pub bank: DelayBank,
    pub grid: Grid,
    pub flow: FlowExponents,
}

impl System {
    pub fn new(network: Network, coeffs: EdgeCoefficients, bank: DelayBank, n: usize) -> Result<Self> {
        let m = network.m();
        if coeffs.m() != m {
            return Err(Error::Shape(format!("{} coefficient profiles for {m} edges", coeffs.m())));
        }
        if bank.m() != m {
            return Err(Error::Shape(format!("delay measures act on {} edges, network has {m}", bank.m())));
        }
        let grid = Grid::new(m, n)?;
        let flow = FlowExponents::new(&coeffs, &grid)?;
        Ok(Self { network, coeffs, bank, grid, flow })
    }

    /// Same system on a different number of nodes per edge.
    pub fn regrid(&self, n: usize) -> Result<Self> {
        Self::new(self.network.clone(), self.coeffs.clone(), self.bank.clone(), n)
    }

    pub fn with_bank(&self, bank: DelayBank) -> Result<Self> {
        Self::new(self.network.clone(), self.coeffs.clone(), bank, self.grid.n())
    }

    pub fn m(&self) -> usize {
        self.network.m()
    }

    pub fn n_vertices(&self) -> usize {
        self.network.n()
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    /// Shortest transit time over all edges.
    pub fn tau_min(&self) -> f64 {
        (0..self.m()).map(|j| self.flow.tau_total(j)).fold(f64::INFINITY, f64::min)
    }
}
