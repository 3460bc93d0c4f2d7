#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DerivativeMode {
    FiniteDifference,
    Analytic,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub fd: f64,
    pub id: f64,
    pub chain: f64,
    pub ode: f64,
}

impl Tolerances {
    pub fn for_mode(mode: DerivativeMode) -> Self {
        let id = match mode {
            DerivativeMode::FiniteDifference => 1e-4,
            DerivativeMode::Analytic => 1e-8,
        };
        Tolerances { fd: 1e-5, id, chain: 1e-3, ode: 1e-6 }
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::for_mode(DerivativeMode::FiniteDifference)
    }
}

/// Numerical knobs shared by every chart operation.
///
/// `fd_step` drives the central differences of the metric itself; every
/// derivative taken of an already differentiated field goes through a
/// fourth-order stencil with `nested_step`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Settings {
    pub fd_step: f64,
    pub nested_step: f64,
    pub mode: DerivativeMode,
    pub ode_steps_per_unit: usize,
    pub tol: Tolerances,
}

impl Settings {
    pub fn analytic() -> Self {
        Settings {
            mode: DerivativeMode::Analytic,
            tol: Tolerances::for_mode(DerivativeMode::Analytic),
            ..Settings::default()
        }
    }

    pub fn with_fd_step(mut self, h: f64) -> Self {
        self.fd_step = h;
        self
    }

    pub fn with_mode(mut self, mode: DerivativeMode) -> Self {
        self.mode = mode;
        self
    }

    /// Distance from the box boundary that leaves room for three nested
    /// stencils on top of the metric difference quotient.
    pub fn sampling_margin(&self) -> f64 {
        2.0 * self.fd_step + 8.0 * self.nested_step
    }
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            fd_step: 1e-5,
            nested_step: 1e-3,
            mode: DerivativeMode::FiniteDifference,
            ode_steps_per_unit: 2000,
            tol: Tolerances::default(),
        }
    }
}
