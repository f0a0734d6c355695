/// Unit cubes D_z = {x : -1/2 <= x_i - z_i < 1/2} centered on the integer
/// lattice; D_0 contains the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CubePartition {
    dim: usize,
}

impl CubePartition {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "dimension must be positive");
        Self { dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Lattice center of the unique cube containing `x`.
    pub fn cube_of(&self, x: &[f64]) -> Vec<i64> {
        debug_assert_eq!(x.len(), self.dim);
        x.iter().map(|&v| (v + 0.5).floor() as i64).collect()
    }

    pub fn contains(&self, z: &[i64], x: &[f64]) -> bool {
        z.iter().zip(x).all(|(&zi, &xi)| {
            let d = xi - zi as f64;
            (-0.5..0.5).contains(&d)
        })
    }
}
