use super::Vec3;

/// Row-major 3x3 matrix. Only used for rotations here, but the arithmetic is
/// general.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3 {
    pub rows: [[f64; 3]; 3],
}

impl Mat3 {
    pub fn identity() -> Self {
        Mat3 {
            rows: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    /// Rotation matrix from an axis-angle vector via the Rodrigues formula.
    /// Near zero angle the sin(t)/t and (1-cos(t))/t^2 factors switch to their
    /// series expansions so the map stays smooth.
    pub fn from_axis_angle(omega: Vec3) -> Self {
        let theta2 = omega.norm_squared();
        let (a, b) = if theta2 < 1e-12 {
            (1.0 - theta2 / 6.0, 0.5 - theta2 / 24.0)
        } else {
            let theta = theta2.sqrt();
            (theta.sin() / theta, (1.0 - theta.cos()) / theta2)
        };
        let (wx, wy, wz) = (omega.x, omega.y, omega.z);
        // I + a*K + b*K^2 with K = skew(omega).
        let k = Mat3 {
            rows: [[0.0, -wz, wy], [wz, 0.0, -wx], [-wy, wx, 0.0]],
        };
        let k2 = k.mul_mat(&k);
        let mut rows = Mat3::identity().rows;
        for r in 0..3 {
            for c in 0..3 {
                rows[r][c] += a * k.rows[r][c] + b * k2.rows[r][c];
            }
        }
        Mat3 { rows }
    }

    fn skew(v: Vec3) -> Mat3 {
        Mat3 {
            rows: [[0.0, -v.z, v.y], [v.z, 0.0, -v.x], [-v.y, v.x, 0.0]],
        }
    }

    /// Partial derivatives of the rotation matrix with respect to the three
    /// axis-angle coordinates: dR/dw_i = ((w_i K + skew(w x (I - R) e_i)) /
    /// |w|^2) R, degenerating to skew(e_i) at zero angle.
    pub fn rotation_gradient(omega: Vec3) -> [Mat3; 3] {
        let basis = [
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
        ];
        let theta2 = omega.norm_squared();
        if theta2 < 1e-16 {
            return [
                Mat3::skew(basis[0]),
                Mat3::skew(basis[1]),
                Mat3::skew(basis[2]),
            ];
        }
        let r = Mat3::from_axis_angle(omega);
        let k = Mat3::skew(omega);
        let w = [omega.x, omega.y, omega.z];
        let mut out = [Mat3::identity(); 3];
        for i in 0..3 {
            let e = basis[i];
            let residual = e - r.mul_vec(e);
            let a = Mat3::skew(omega.cross(residual));
            let mut rows = [[0.0; 3]; 3];
            for rr in 0..3 {
                for cc in 0..3 {
                    rows[rr][cc] = (w[i] * k.rows[rr][cc] + a.rows[rr][cc]) / theta2;
                }
            }
            out[i] = Mat3 { rows }.mul_mat(&r);
        }
        out
    }

    pub fn transpose(&self) -> Mat3 {
        let m = &self.rows;
        Mat3 {
            rows: [
                [m[0][0], m[1][0], m[2][0]],
                [m[0][1], m[1][1], m[2][1]],
                [m[0][2], m[1][2], m[2][2]],
            ],
        }
    }

    pub fn mul_vec(&self, v: Vec3) -> Vec3 {
        let m = &self.rows;
        Vec3::new(
            m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
        )
    }

    pub fn mul_mat(&self, o: &Mat3) -> Mat3 {
        let mut rows = [[0.0; 3]; 3];
        for r in 0..3 {
            for c in 0..3 {
                rows[r][c] = (0..3).map(|k| self.rows[r][k] * o.rows[k][c]).sum();
            }
        }
        Mat3 { rows }
    }

    pub fn trace(&self) -> f64 {
        self.rows[0][0] + self.rows[1][1] + self.rows[2][2]
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.rows;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }
}
