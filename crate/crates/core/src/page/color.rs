use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize};

/// sRGB color with 8-bit channels and a straight (non-premultiplied) alpha.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ColorValue {
    pub r: u8,
    pub g: u8,
    pub b: u8,
    pub a: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ColorError {
    #[error("alpha {0} outside [0, 1]")]
    Alpha(f64),
    #[error("cannot parse color {0:?}")]
    Syntax(String),
}

impl ColorValue {
    pub const BLACK: ColorValue = ColorValue::rgb(0, 0, 0);
    pub const WHITE: ColorValue = ColorValue::rgb(255, 255, 255);
    pub const TRANSPARENT: ColorValue = ColorValue {
        r: 0,
        g: 0,
        b: 0,
        a: 0.0,
    };

    pub const fn rgb(r: u8, g: u8, b: u8) -> Self {
        Self { r, g, b, a: 1.0 }
    }

    pub fn rgba(r: u8, g: u8, b: u8, a: f64) -> Result<Self, ColorError> {
        if !(0.0..=1.0).contains(&a) {
            return Err(ColorError::Alpha(a));
        }
        Ok(Self { r, g, b, a })
    }

    /// `#rgb`, `#rrggbb`, `#rrggbbaa`, `rgb()`, `rgba()`, `hsl()` and CSS named colors.
    pub fn parse_css(s: &str) -> Result<Self, ColorError> {
        let c = csscolorparser::parse(s.trim()).map_err(|_| ColorError::Syntax(s.to_string()))?;
        let [r, g, b, _] = c.to_rgba8();
        Self::rgba(r, g, b, f64::from(c.a).clamp(0.0, 1.0))
    }

    pub fn is_opaque(&self) -> bool {
        self.a >= 1.0
    }

    pub fn hex(&self) -> String {
        if self.is_opaque() {
            format!("#{:02x}{:02x}{:02x}", self.r, self.g, self.b)
        } else {
            format!(
                "#{:02x}{:02x}{:02x}{:02x}",
                self.r,
                self.g,
                self.b,
                round_half_up(self.a * 255.0)
            )
        }
    }

    fn channels(&self) -> [f64; 3] {
        [f64::from(self.r), f64::from(self.g), f64::from(self.b)]
    }
}

impl fmt::Display for ColorValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.hex())
    }
}

impl FromStr for ColorValue {
    type Err = ColorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse_css(s)
    }
}

impl<'de> Deserialize<'de> for ColorValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Channels {
            r: u8,
            g: u8,
            b: u8,
            #[serde(default = "one")]
            a: f64,
        }
        fn one() -> f64 {
            1.0
        }
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Css(String),
            Channels(Channels),
        }
        match Repr::deserialize(d)? {
            Repr::Css(s) => ColorValue::parse_css(&s).map_err(serde::de::Error::custom),
            Repr::Channels(c) => {
                ColorValue::rgba(c.r, c.g, c.b, c.a).map_err(serde::de::Error::custom)
            }
        }
    }
}

pub(crate) fn round_half_up(v: f64) -> u8 {
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}

fn over(top: [f64; 3], alpha: f64, below: [f64; 3]) -> [f64; 3] {
    std::array::from_fn(|i| top[i] * alpha + below[i] * (1.0 - alpha))
}

fn composite_stack(stack: &[ColorValue]) -> [f64; 3] {
    // An empty or translucent bottom sits on the document default (white).
    let mut acc = ColorValue::WHITE.channels();
    for layer in stack {
        acc = over(layer.channels(), layer.a, acc);
    }
    acc
}

fn to_opaque(c: [f64; 3]) -> ColorValue {
    ColorValue::rgb(round_half_up(c[0]), round_half_up(c[1]), round_half_up(c[2]))
}

/// Opaque color seen through a stack of backgrounds, bottom layer first.
pub fn composite_background(stack: &[ColorValue]) -> ColorValue {
    to_opaque(composite_stack(stack))
}

/// Source-over composite of `fg` onto `stack` (bottom first). The result is opaque;
/// channels are rounded half-up once, after all layers are blended.
pub fn effective_color(fg: ColorValue, stack: &[ColorValue]) -> ColorValue {
    to_opaque(over(fg.channels(), fg.a, composite_stack(stack)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn opaque_foreground_is_unchanged() {
        let fg = ColorValue::rgb(12, 200, 99);
        assert_eq!(effective_color(fg, &[ColorValue::WHITE]), fg);
    }

    #[test]
    fn transparent_foreground_shows_background() {
        let fg = ColorValue::rgba(10, 10, 10, 0.0).unwrap();
        assert_eq!(effective_color(fg, &[ColorValue::WHITE]), ColorValue::WHITE);
    }

    #[test]
    fn half_black_over_white_rounds_up() {
        // 0 * 0.5 + 255 * 0.5 = 127.5 -> 128
        let fg = ColorValue::rgba(0, 0, 0, 0.5).unwrap();
        assert_eq!(effective_color(fg, &[ColorValue::WHITE]), ColorValue::rgb(128, 128, 128));
    }

    #[test]
    fn layered_backgrounds_blend_in_order() {
        // red at 50% over blue: (127.5, 0, 127.5) -> (128, 0, 128)
        let stack = [ColorValue::rgb(0, 0, 255), ColorValue::rgba(255, 0, 0, 0.5).unwrap()];
        assert_eq!(composite_background(&stack), ColorValue::rgb(128, 0, 128));
    }

    #[test]
    fn parses_css_forms() {
        assert_eq!(ColorValue::parse_css("#767676").unwrap(), ColorValue::rgb(118, 118, 118));
        assert_eq!(ColorValue::parse_css("#fff").unwrap(), ColorValue::WHITE);
        assert_eq!(ColorValue::parse_css("black").unwrap(), ColorValue::BLACK);
        let c = ColorValue::parse_css("rgba(0, 0, 0, 0.25)").unwrap();
        assert_eq!(c.a, 0.25);
        assert_eq!(ColorValue::parse_css("transparent").unwrap().a, 0.0);
        assert!(ColorValue::parse_css("not-a-color").is_err());
    }

    #[test]
    fn deserializes_string_or_channels() {
        let a: ColorValue = serde_json::from_str(r##""#102030""##).unwrap();
        let b: ColorValue = serde_json::from_str(r#"{"r":16,"g":32,"b":48}"#).unwrap();
        assert_eq!(a, b);
        assert!(serde_json::from_str::<ColorValue>(r#"{"r":1,"g":2,"b":3,"a":1.5}"#).is_err());
    }

    proptest! {
        #[test]
        fn composite_is_always_opaque(
            r in 0u8..=255, g in 0u8..=255, b in 0u8..=255, a in 0.0f64..=1.0,
            br in 0u8..=255, ba in 0.0f64..=1.0,
        ) {
            let fg = ColorValue::rgba(r, g, b, a).unwrap();
            let stack = [ColorValue::WHITE, ColorValue::rgba(br, br, br, ba).unwrap()];
            prop_assert!(effective_color(fg, &stack).is_opaque());
        }
    }
}
