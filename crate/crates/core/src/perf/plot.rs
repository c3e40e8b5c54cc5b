use std::fmt::Write;

use super::sweep::SweepRow;

const PANEL_W: f64 = 360.0;
const PANEL_H: f64 = 260.0;
const MARGIN: f64 = 50.0;

struct Panel<'a> {
    title: &'a str,
    x_label: &'a str,
    points: Vec<(f64, f64)>,
}

fn panel(svg: &mut String, x0: f64, p: &Panel) {
    let (w, h) = (PANEL_W - 2.0 * MARGIN, PANEL_H - 2.0 * MARGIN);
    let xmax = p
        .points
        .iter()
        .map(|q| q.0)
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let ymax = p
        .points
        .iter()
        .map(|q| q.1)
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let ox = x0 + MARGIN;
    let oy = PANEL_H - MARGIN;
    let _ = writeln!(
        svg,
        r#"<g><text x="{:.1}" y="20" text-anchor="middle" font-size="13">{}</text>"#,
        x0 + PANEL_W / 2.0,
        p.title
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{ox:.1}" y1="{oy:.1}" x2="{:.1}" y2="{oy:.1}" stroke="black"/><line x1="{ox:.1}" y1="{oy:.1}" x2="{ox:.1}" y2="{:.1}" stroke="black"/>"#,
        ox + w,
        oy - h
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="11">{}</text>"#,
        ox + w / 2.0,
        oy + 30.0,
        p.x_label
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" font-size="10">{:.3e} ops/s</text>"#,
        ox,
        oy - h - 6.0,
        ymax
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="end" font-size="10">{}</text>"#,
        ox + w,
        oy + 14.0,
        xmax
    );
    let coords: Vec<String> = p
        .points
        .iter()
        .map(|&(x, y)| format!("{:.2},{:.2}", ox + x / xmax * w, oy - y / ymax * h))
        .collect();
    let _ = writeln!(
        svg,
        r#"<polyline fill="none" stroke="steelblue" stroke-width="2" points="{}"/></g>"#,
        coords.join(" ")
    );
}

/// Two line charts of sustained throughput: against channel count at
/// `ref_freq_hz`, and against frequency at `ref_channels`.
pub fn render_sweep_svg(rows: &[SweepRow], ref_freq_hz: f64, ref_channels: usize) -> String {
    let mut by_channels: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.freq_hz == ref_freq_hz)
        .map(|r| (r.channels as f64, r.sustained_ops))
        .collect();
    by_channels.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut by_freq: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.channels == ref_channels)
        .map(|r| (r.freq_hz / 1e9, r.sustained_ops))
        .collect();
    by_freq.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="0 0 {:.0} {:.0}">"#,
        2.0 * PANEL_W,
        PANEL_H,
        2.0 * PANEL_W,
        PANEL_H
    );
    let t1 = format!("Wavelength channels at {} GHz", ref_freq_hz / 1e9);
    let t2 = format!("Operating frequency at {ref_channels} channels");
    panel(
        &mut svg,
        0.0,
        &Panel {
            title: &t1,
            x_label: "channels",
            points: by_channels,
        },
    );
    panel(
        &mut svg,
        PANEL_W,
        &Panel {
            title: &t2,
            x_label: "frequency (GHz)",
            points: by_freq,
        },
    );
    svg.push_str("</svg>\n");
    svg
}

/// Picks the panel references: the requested value if it appears in the
/// grid, otherwise the largest one present.
pub fn plot_references(rows: &[SweepRow], freq_hz: f64, channels: usize) -> (f64, usize) {
    let f = if rows.iter().any(|r| r.freq_hz == freq_hz) {
        freq_hz
    } else {
        rows.iter().map(|r| r.freq_hz).fold(0.0, f64::max)
    };
    let c = if rows.iter().any(|r| r.channels == channels) {
        channels
    } else {
        rows.iter().map(|r| r.channels).max().unwrap_or(0)
    };
    (f, c)
}
