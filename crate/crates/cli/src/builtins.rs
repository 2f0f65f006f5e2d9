//! Stable names of the built-in spectral pairs, kernel families and ladders.

use chaos_bounds::sheet::{EPS_LADDER_EXPONENTS, M_LADDER};
use chaos_bounds::toeplitz::BUILTIN_PAIRS;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Builtin {
    pub category: &'static str,
    pub name: &'static str,
    pub description: String,
}

fn list(v: &[impl ToString]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

pub fn builtins() -> Vec<Builtin> {
    let mut out: Vec<Builtin> = BUILTIN_PAIRS
        .iter()
        .map(|&(name, desc)| Builtin {
            category: "spectral-pair",
            name,
            description: desc.to_string(),
        })
        .collect();
    out.push(Builtin {
        category: "kernel-family",
        name: "sheet-kernel",
        description: format!(
            "f_eps(x, y) = (1/max(x, y, eps) - 1)/sqrt(4 log(1/eps)) on [0, 1], tensorized to d axes; eps ladder e^-k for k in {{{}}}",
            list(&EPS_LADDER_EXPONENTS)
        ),
    });
    out.push(Builtin {
        category: "ladder",
        name: "eps-ladder",
        description: format!("sheet eps_exponents {{{}}}", list(&EPS_LADDER_EXPONENTS)),
    });
    out.push(Builtin {
        category: "ladder",
        name: "m-ladder",
        description: format!("sheet grid sizes {{{}}}", list(&M_LADDER)),
    });
    out.push(Builtin {
        category: "ladder",
        name: "toeplitz-horizons",
        description: "horizons {25, 50, 100} at mesh 0.05".to_string(),
    });
    out.push(Builtin {
        category: "ladder",
        name: "breuer-major-horizons",
        description: "horizons {100, 200, 500} at delta 0.25, H = 0.3, q = 2".to_string(),
    });
    out
}

pub fn render() -> String {
    builtins()
        .iter()
        .map(|b| format!("{:<14} {:<22} {}\n", b.category, b.name, b.description))
        .collect()
}
