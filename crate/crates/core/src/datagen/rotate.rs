/// `(sin, cos)` of an angle in degrees, exact at multiples of 90.
fn sin_cos_deg(theta: f64) -> (f64, f64) {
    let t = theta.rem_euclid(360.0);
    match t {
        0.0 => (0.0, 1.0),
        90.0 => (1.0, 0.0),
        180.0 => (0.0, -1.0),
        270.0 => (-1.0, 0.0),
        t => t.to_radians().sin_cos(),
    }
}

/// Rotates a square row-major image counterclockwise (as displayed, rows
/// pointing down) by `theta_deg` about its center. Bilinear interpolation;
/// samples outside the image read as 0.
pub fn rotate_image(img: &[f64], side: usize, theta_deg: f64) -> Vec<f64> {
    assert_eq!(img.len(), side * side, "image is not {side}x{side}");
    let (s, c) = sin_cos_deg(theta_deg);
    let center = (side as f64 - 1.0) / 2.0;
    let at = |r: isize, col: isize| -> f64 {
        if r < 0 || col < 0 || r >= side as isize || col >= side as isize {
            0.0
        } else {
            img[r as usize * side + col as usize]
        }
    };
    let mut out = vec![0.0; side * side];
    for r in 0..side {
        for col in 0..side {
            // Output offset with the vertical axis pointing up.
            let u = col as f64 - center;
            let v = center - r as f64;
            let su = u * c + v * s;
            let sv = -u * s + v * c;
            let x = center + su;
            let y = center - sv;
            let (x0, y0) = (x.floor(), y.floor());
            let (fx, fy) = (x - x0, y - y0);
            let (xi, yi) = (x0 as isize, y0 as isize);
            let mut acc = 0.0;
            if fx == 0.0 && fy == 0.0 {
                acc = at(yi, xi);
            } else {
                for (dy, wy) in [(0, 1.0 - fy), (1, fy)] {
                    for (dx, wx) in [(0, 1.0 - fx), (1, fx)] {
                        let w = wy * wx;
                        if w != 0.0 {
                            acc += w * at(yi + dy, xi + dx);
                        }
                    }
                }
            }
            out[r * side + col] = acc;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_is_identity() {
        let img: Vec<f64> = (0..16).map(|v| v as f64).collect();
        assert_eq!(rotate_image(&img, 4, 0.0), img);
        assert_eq!(rotate_image(&img, 4, 360.0), img);
    }

    #[test]
    fn quarter_turn_is_a_permutation() {
        let img: Vec<f64> = (0..9).map(|v| v as f64).collect();
        // Counterclockwise: the top row becomes the left column, read bottom-up.
        assert_eq!(
            rotate_image(&img, 3, 90.0),
            vec![2.0, 5.0, 8.0, 1.0, 4.0, 7.0, 0.0, 3.0, 6.0]
        );
    }
}
