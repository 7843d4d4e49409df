use crate::page::ColorValue;
use crate::scalar::Scalar;

fn linearize<T: Scalar>(channel: u8) -> T {
    let v = T::of_usize(usize::from(channel)) / T::of(255.0);
    if v <= T::of(0.03928) {
        v / T::of(12.92)
    } else {
        ((v + T::of(0.055)) / T::of(1.055)).powf(T::of(2.4))
    }
}

/// WCAG 2.x relative luminance of an opaque sRGB color, in [0, 1].
pub fn relative_luminance_in<T: Scalar>(c: ColorValue) -> T {
    let l = T::of(0.2126) * linearize::<T>(c.r)
        + T::of(0.7152) * linearize::<T>(c.g)
        + T::of(0.0722) * linearize::<T>(c.b);
    l.max(T::zero()).min(T::one())
}

/// `(L_light + 0.05) / (L_dark + 0.05)`, always in [1, 21].
pub fn contrast_ratio_in<T: Scalar>(fg: ColorValue, bg: ColorValue) -> T {
    let a = relative_luminance_in::<T>(fg);
    let b = relative_luminance_in::<T>(bg);
    let (light, dark) = if a >= b { (a, b) } else { (b, a) };
    (light + T::of(0.05)) / (dark + T::of(0.05))
}

pub fn relative_luminance(c: ColorValue) -> f64 {
    relative_luminance_in::<f64>(c)
}

pub fn contrast_ratio(fg: ColorValue, bg: ColorValue) -> f64 {
    contrast_ratio_in::<f64>(fg, bg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const GRAY: ColorValue = ColorValue::rgb(0x76, 0x76, 0x76);

    #[test]
    fn extremes() {
        assert_eq!(relative_luminance(ColorValue::BLACK), 0.0);
        assert_eq!(relative_luminance(ColorValue::WHITE), 1.0);
        assert_eq!(contrast_ratio(ColorValue::WHITE, ColorValue::BLACK), 21.0);
        assert_eq!(contrast_ratio(GRAY, GRAY), 1.0);
    }

    #[test]
    fn aa_boundary_gray() {
        // Reference values computed at 30 significant digits.
        assert!((relative_luminance(GRAY) - 0.181_164_244_249_86).abs() < 1e-9);
        assert!((contrast_ratio(GRAY, ColorValue::WHITE) - 4.542_224_959_605).abs() < 1e-9);
        let single: f32 = contrast_ratio_in(GRAY, ColorValue::WHITE);
        assert!((f64::from(single) - 4.5422).abs() < 1e-3);
    }

    proptest! {
        #[test]
        fn symmetric_and_bounded(a in any::<[u8; 3]>(), b in any::<[u8; 3]>()) {
            let (x, y) = (ColorValue::rgb(a[0], a[1], a[2]), ColorValue::rgb(b[0], b[1], b[2]));
            let cr = contrast_ratio(x, y);
            prop_assert_eq!(cr, contrast_ratio(y, x));
            prop_assert!((1.0..=21.0).contains(&cr));
        }

        #[test]
        fn darker_text_on_white_never_lowers_contrast(v in 1u8..=255, d in 1u8..=255) {
            let darker = v.saturating_sub(d);
            let base = contrast_ratio(ColorValue::rgb(v, v, v), ColorValue::WHITE);
            prop_assert!(contrast_ratio(ColorValue::rgb(darker, darker, darker), ColorValue::WHITE) >= base);
        }
    }
}
