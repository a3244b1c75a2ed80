use advplay_core::nn::IMAGE_SIDE;

const RAMP: &[u8] = b" .:-=+*#%@";

fn shade(v: f32) -> char {
    let i = (v.clamp(0.0, 1.0) * (RAMP.len() - 1) as f32).round() as usize;
    RAMP[i] as char
}

/// Two 28x28 intensity renderings side by side, one character per pixel.
pub fn side_by_side(left: &[f32], right: &[f32], titles: (&str, &str)) -> String {
    let gap = "   ";
    let mut out = format!("{:<w$}{gap}{}\n", titles.0, titles.1, w = IMAGE_SIDE);
    for row in 0..IMAGE_SIDE {
        let cells = |px: &[f32]| -> String {
            px[row * IMAGE_SIDE..(row + 1) * IMAGE_SIDE]
                .iter()
                .map(|&v| shade(v))
                .collect()
        };
        out.push_str(&cells(left));
        out.push_str(gap);
        out.push_str(&cells(right));
        out.push('\n');
    }
    out
}
