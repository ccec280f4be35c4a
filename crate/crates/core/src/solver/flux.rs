//! Interface fluxes for the Euler system in conservative variables
//! `(rho, m_x, m_y, E)`, evaluated along one axis.

use serde::{Deserialize, Serialize};

/// Conservative variables `(rho, m_x, m_y, E)`.
pub type Cons = [f64; 4];

/// Primitive variables `(rho, u_x, u_y, p)`.
pub type Prim = [f64; 4];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FluxKind {
    /// Local Lax-Friedrichs.
    Rusanov,
    /// Two-wave Harten-Lax-van Leer with Davis speed bounds.
    Hll,
}

impl std::fmt::Display for FluxKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FluxKind::Rusanov => f.write_str("rusanov"),
            FluxKind::Hll => f.write_str("hll"),
        }
    }
}

pub fn sound_speed(w: &Prim, gamma: f64) -> f64 {
    if w[0] > 0.0 && w[3] > 0.0 {
        (gamma * w[3] / w[0]).sqrt()
    } else {
        0.0
    }
}

pub fn prim_to_cons(w: &Prim, c_v: f64) -> Cons {
    let rho = w[0];
    [
        rho,
        rho * w[1],
        rho * w[2],
        0.5 * rho * (w[1] * w[1] + w[2] * w[2]) + c_v * w[3],
    ]
}

/// Physical flux along `axis`.
pub fn physical_flux(w: &Prim, u: &Cons, axis: usize) -> Cons {
    let un = w[1 + axis];
    let mut f = [u[0] * un, u[1] * un, u[2] * un, (u[3] + w[3]) * un];
    f[1 + axis] += w[3];
    f
}

/// Numerical flux between reconstructed states `wl | wr` along `axis`.
///
/// `extra_viscosity` adds `-0.5 * nu * a * (U_R - U_L)` on top of the
/// base flux, where `a` is the local maximal signal speed.
pub fn numerical_flux(
    kind: FluxKind,
    wl: &Prim,
    wr: &Prim,
    axis: usize,
    gamma: f64,
    extra_viscosity: f64,
) -> Cons {
    let c_v = 1.0 / (gamma - 1.0);
    let ul = prim_to_cons(wl, c_v);
    let ur = prim_to_cons(wr, c_v);
    let fl = physical_flux(wl, &ul, axis);
    let fr = physical_flux(wr, &ur, axis);
    let cl = sound_speed(wl, gamma);
    let cr = sound_speed(wr, gamma);
    let unl = wl[1 + axis];
    let unr = wr[1 + axis];
    let a = (unl.abs() + cl).max(unr.abs() + cr);

    let mut f = match kind {
        FluxKind::Rusanov => {
            let mut f = [0.0; 4];
            for k in 0..4 {
                f[k] = 0.5 * (fl[k] + fr[k]) - 0.5 * a * (ur[k] - ul[k]);
            }
            f
        }
        FluxKind::Hll => {
            let sl = (unl - cl).min(unr - cr);
            let sr = (unl + cl).max(unr + cr);
            if sl >= 0.0 {
                fl
            } else if sr <= 0.0 {
                fr
            } else {
                let inv = 1.0 / (sr - sl);
                let mut f = [0.0; 4];
                for k in 0..4 {
                    f[k] = inv * (sr * fl[k] - sl * fr[k] + sl * sr * (ur[k] - ul[k]));
                }
                f
            }
        }
    };
    if extra_viscosity > 0.0 {
        for k in 0..4 {
            f[k] -= 0.5 * extra_viscosity * a * (ur[k] - ul[k]);
        }
    }
    f
}

fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

/// Mirror image of a cell across a wall normal to `axis`.
fn mirror(w: &Prim, axis: usize) -> Prim {
    let mut g = *w;
    g[1 + axis] = -g[1 + axis];
    g
}

/// Interface fluxes for one line of cells along `axis`, bounded by
/// reflective walls. Returns `n + 1` fluxes; entries `0` and `n` are the
/// wall faces.
///
/// `viscosity(face)` yields the extra viscosity coefficient for each face.
pub fn line_fluxes(
    kind: FluxKind,
    second_order: bool,
    line: &[Prim],
    axis: usize,
    gamma: f64,
    mut viscosity: impl FnMut(usize) -> f64,
) -> Vec<Cons> {
    let n = line.len();
    // Two ghost layers on each side.
    let at = |k: isize| -> Prim {
        if k < 0 {
            mirror(&line[(-k - 1) as usize], axis)
        } else if k >= n as isize {
            mirror(&line[(2 * n as isize - 1 - k) as usize], axis)
        } else {
            line[k as usize]
        }
    };
    let slope = |k: isize| -> Prim {
        let (wm, w0, wp) = (at(k - 1), at(k), at(k + 1));
        let mut s = [0.0; 4];
        for q in 0..4 {
            s[q] = minmod(w0[q] - wm[q], wp[q] - w0[q]);
        }
        s
    };
    (0..=n)
        .map(|face| {
            let k = face as isize;
            let (mut wl, mut wr) = (at(k - 1), at(k));
            if second_order {
                let (sl, sr) = (slope(k - 1), slope(k));
                for q in 0..4 {
                    wl[q] += 0.5 * sl[q];
                    wr[q] -= 0.5 * sr[q];
                }
            }
            numerical_flux(kind, &wl, &wr, axis, gamma, viscosity(face))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const G: f64 = 1.4;

    #[test]
    fn consistency_with_physical_flux() {
        let w = [1.3, 0.4, -0.2, 0.9];
        let u = prim_to_cons(&w, 2.5);
        for kind in [FluxKind::Rusanov, FluxKind::Hll] {
            for axis in 0..2 {
                let f = numerical_flux(kind, &w, &w, axis, G, 0.3);
                let exact = physical_flux(&w, &u, axis);
                for k in 0..4 {
                    assert!((f[k] - exact[k]).abs() < 1e-14, "{kind:?} axis {axis}");
                }
            }
        }
    }

    #[test]
    fn wall_faces_carry_no_mass_or_energy() {
        let line = [[1.0, 0.7, 0.0, 1.0], [0.5, -0.2, 0.0, 0.4], [0.8, 0.3, 0.0, 0.6], [0.2, -0.9, 0.0, 0.1]];
        for kind in [FluxKind::Rusanov, FluxKind::Hll] {
            for second in [false, true] {
                let f = line_fluxes(kind, second, &line, 0, G, |_| 0.2);
                for face in [0, line.len()] {
                    assert!(f[face][0].abs() < 1e-15);
                    assert!(f[face][3].abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn minmod_limits() {
        assert_eq!(minmod(1.0, 2.0), 1.0);
        assert_eq!(minmod(-3.0, -2.0), -2.0);
        assert_eq!(minmod(1.0, -1.0), 0.0);
    }
}
