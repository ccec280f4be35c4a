//! Exact solution of the one-dimensional Riemann problem for a polytropic
//! gas (two-rarefaction/two-shock Newton iteration on the star pressure).

#[derive(Debug, Clone, Copy)]
pub struct Side {
    pub rho: f64,
    pub u: f64,
    pub p: f64,
}

pub struct Riemann {
    left: Side,
    right: Side,
    gamma: f64,
    p_star: f64,
    u_star: f64,
}

impl Riemann {
    pub fn new(left: Side, right: Side, gamma: f64) -> Self {
        let mut r = Riemann {
            left,
            right,
            gamma,
            p_star: 0.0,
            u_star: 0.0,
        };
        r.solve();
        r
    }

    fn sound(&self, s: &Side) -> f64 {
        (self.gamma * s.p / s.rho).sqrt()
    }

    /// Pressure function of one side and its derivative.
    fn f(&self, p: f64, s: &Side) -> (f64, f64) {
        let g = self.gamma;
        let c = self.sound(s);
        if p > s.p {
            let a = 2.0 / ((g + 1.0) * s.rho);
            let b = (g - 1.0) / (g + 1.0) * s.p;
            let q = (a / (p + b)).sqrt();
            ((p - s.p) * q, q * (1.0 - 0.5 * (p - s.p) / (p + b)))
        } else {
            let e = (g - 1.0) / (2.0 * g);
            let val = 2.0 * c / (g - 1.0) * ((p / s.p).powf(e) - 1.0);
            let der = (p / s.p).powf(-(g + 1.0) / (2.0 * g)) / (s.rho * c);
            (val, der)
        }
    }

    fn solve(&mut self) {
        let (l, r) = (self.left, self.right);
        let mut p = 0.5 * (l.p + r.p);
        for _ in 0..100 {
            let (fl, dl) = self.f(p, &l);
            let (fr, dr) = self.f(p, &r);
            let next = (p - (fl + fr + r.u - l.u) / (dl + dr)).max(1e-12);
            let done = (next - p).abs() < 1e-15 * p;
            p = next;
            if done {
                break;
            }
        }
        let (fl, _) = self.f(p, &l);
        let (fr, _) = self.f(p, &r);
        self.p_star = p;
        self.u_star = 0.5 * (l.u + r.u) + 0.5 * (fr - fl);
    }

    pub fn star(&self) -> (f64, f64) {
        (self.p_star, self.u_star)
    }

    /// `(rho, u, p)` at similarity coordinate `xi = (x - x0) / t`.
    pub fn sample(&self, xi: f64) -> (f64, f64, f64) {
        let g = self.gamma;
        let (ps, us) = (self.p_star, self.u_star);
        let gm = (g - 1.0) / (g + 1.0);
        if xi <= us {
            let s = self.left;
            let c = self.sound(&s);
            if ps > s.p {
                let rho_star = s.rho * (ps / s.p + gm) / (gm * ps / s.p + 1.0);
                let speed = s.u - c * ((g + 1.0) / (2.0 * g) * ps / s.p + (g - 1.0) / (2.0 * g)).sqrt();
                if xi <= speed {
                    (s.rho, s.u, s.p)
                } else {
                    (rho_star, us, ps)
                }
            } else {
                let c_star = c * (ps / s.p).powf((g - 1.0) / (2.0 * g));
                let head = s.u - c;
                let tail = us - c_star;
                if xi <= head {
                    (s.rho, s.u, s.p)
                } else if xi >= tail {
                    (s.rho * (ps / s.p).powf(1.0 / g), us, ps)
                } else {
                    let k = 2.0 / (g + 1.0) + gm / c * (s.u - xi);
                    let rho = s.rho * k.powf(2.0 / (g - 1.0));
                    let u = 2.0 / (g + 1.0) * (c + (g - 1.0) / 2.0 * s.u + xi);
                    (rho, u, s.p * k.powf(2.0 * g / (g - 1.0)))
                }
            }
        } else {
            let s = self.right;
            let c = self.sound(&s);
            if ps > s.p {
                let rho_star = s.rho * (ps / s.p + gm) / (gm * ps / s.p + 1.0);
                let speed = s.u + c * ((g + 1.0) / (2.0 * g) * ps / s.p + (g - 1.0) / (2.0 * g)).sqrt();
                if xi >= speed {
                    (s.rho, s.u, s.p)
                } else {
                    (rho_star, us, ps)
                }
            } else {
                let c_star = c * (ps / s.p).powf((g - 1.0) / (2.0 * g));
                let head = s.u + c;
                let tail = us + c_star;
                if xi >= head {
                    (s.rho, s.u, s.p)
                } else if xi <= tail {
                    (s.rho * (ps / s.p).powf(1.0 / g), us, ps)
                } else {
                    let k = 2.0 / (g + 1.0) - gm / c * (s.u - xi);
                    let rho = s.rho * k.powf(2.0 / (g - 1.0));
                    let u = 2.0 / (g + 1.0) * (-c + (g - 1.0) / 2.0 * s.u + xi);
                    (rho, u, s.p * k.powf(2.0 * g / (g - 1.0)))
                }
            }
        }
    }

    /// Cell average of the exact density over `[a, b]` at time `t`, with
    /// the discontinuity at `x0`, by midpoint sub-sampling.
    pub fn density_average(&self, a: f64, b: f64, x0: f64, t: f64, samples: usize) -> f64 {
        let h = (b - a) / samples as f64;
        (0..samples)
            .map(|k| self.sample((a + (k as f64 + 0.5) * h - x0) / t).0)
            .sum::<f64>()
            / samples as f64
    }
}

pub fn sod() -> Riemann {
    Riemann::new(
        Side { rho: 1.0, u: 0.0, p: 1.0 },
        Side { rho: 0.125, u: 0.0, p: 0.1 },
        1.4,
    )
}
