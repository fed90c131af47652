#![allow(dead_code)]

use projective_dpt::euler::{
    solve_refining, Flow, Gas, GasModel, InitialData, Scheme, SolverConfig, Thermal, Velocity,
};
use projective_dpt::{Axis, Lattice};

pub fn line(lo: f64, hi: f64, n: usize) -> Lattice {
    Lattice::new(vec![Axis::new(lo, hi, n).unwrap()]).unwrap()
}

pub fn square(lo: f64, hi: f64, n: usize) -> Lattice {
    Lattice::new(vec![Axis::new(lo, hi, n).unwrap(), Axis::new(lo, hi, n).unwrap()]).unwrap()
}

pub fn cos_bump(a: f64, linear: f64) -> InitialData {
    InitialData::CosBump {
        amplitude: 1.0,
        radius: 1.0,
        power: 2.0,
        center: vec![],
        velocity: Velocity { uniform: vec![], linear },
        thermal: Thermal::Isentropic { a },
    }
}

/// One solver run of the dispersive corpus.
pub struct Case {
    pub name: &'static str,
    pub gas: Gas,
    pub init: InitialData,
    pub domain: (f64, f64),
    /// Cells per axis at the coarse level.
    pub n: usize,
    pub t_end: f64,
}

impl Case {
    pub fn space(&self, refine: usize) -> Lattice {
        let n = self.n * refine;
        match self.gas.d {
            1 => line(self.domain.0, self.domain.1, n),
            _ => square(self.domain.0, self.domain.1, n),
        }
    }

    /// Solves at `refine` times the coarse resolution with 40 stored levels.
    pub fn run(&self, refine: usize) -> Flow {
        let space = self.space(refine);
        let state = self.init.sample(&self.gas, &space).unwrap();
        let n_t = 40 * refine;
        let cfg = SolverConfig {
            t_end: self.t_end,
            n_t,
            store_every: refine,
            scheme: Scheme::Muscl,
            ..SolverConfig::default()
        };
        solve_refining(&state, &cfg, 6).unwrap()
    }
}

/// Mono-atomic flows in one and two dimensions.
pub fn corpus() -> Vec<Case> {
    vec![
        Case {
            name: "d1-bump-at-rest",
            gas: Gas::new(1, 3.0, GasModel::Isentropic { a: 1.0 }).unwrap(),
            init: cos_bump(1.0, 0.0),
            domain: (-10.0, 10.0),
            n: 400,
            t_end: 2.0,
        },
        Case {
            name: "d1-bump-expanding",
            gas: Gas::new(1, 3.0, GasModel::Full).unwrap(),
            init: cos_bump(0.5, 0.5),
            domain: (-10.0, 10.0),
            n: 400,
            t_end: 2.0,
        },
        Case {
            name: "d2-bump-expanding",
            gas: Gas::new(2, 2.0, GasModel::Full).unwrap(),
            init: InitialData::CosBump {
                amplitude: 1.0,
                radius: 1.0,
                power: 2.0,
                center: vec![0.2, 0.0],
                velocity: Velocity { uniform: vec![0.1, 0.0], linear: 0.3 },
                thermal: Thermal::ConstantE { e: 0.5 },
            },
            domain: (-10.0, 10.0),
            n: 80,
            t_end: 1.0,
        },
        Case {
            name: "d2-two-bump",
            gas: Gas::new(2, 2.0, GasModel::Full).unwrap(),
            init: InitialData::TwoBump {
                amplitude: 1.0,
                radius: 0.8,
                centers: [vec![-0.7, 0.0], vec![0.7, 0.2]],
                thermal: Thermal::ConstantE { e: 0.5 },
            },
            domain: (-10.0, 10.0),
            n: 80,
            t_end: 1.0,
        },
    ]
}
