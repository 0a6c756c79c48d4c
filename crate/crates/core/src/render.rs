//! Crease-pattern and folded-state drawings, their SVG text and a plain
//! scanline rasterizer.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fold::{Assignment, Point};
use crate::kernel::CreasePattern;
use crate::solver::FoldedState;

pub type Rgb = [u8; 3];

pub const DEFAULT_SIZE: u32 = 512;
pub const MARGIN_PX: f64 = 16.0;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RenderError {
    #[error("folded state has no complete layer order ({got} of {want} faces)")]
    MissingLayerOrder { got: usize, want: usize },
    #[error("png encoding failed: {0}")]
    Png(String),
    #[error("image buffer has {got} bytes, expected {want}")]
    BufferSize { got: usize, want: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderStyle {
    pub mountain: Rgb,
    pub valley: Rgb,
    pub boundary: Rgb,
    pub flat: Rgb,
    pub background: Rgb,
    pub front_fill: Rgb,
    pub back_fill: Rgb,
    /// Outline drawn around each folded face; `None` leaves fills bare.
    pub face_outline: Option<Rgb>,
    /// Stroke width in pixels.
    pub stroke_width: f64,
}

impl Default for RenderStyle {
    fn default() -> Self {
        RenderStyle {
            mountain: [0, 70, 220],
            valley: [220, 30, 30],
            boundary: [0, 0, 0],
            flat: [150, 150, 150],
            background: [255, 255, 255],
            front_fill: [235, 200, 120],
            back_fill: [120, 160, 220],
            face_outline: Some([60, 60, 60]),
            stroke_width: 2.0,
        }
    }
}

impl RenderStyle {
    pub fn assignment_color(&self, a: Assignment) -> Rgb {
        match a {
            Assignment::M => self.mountain,
            Assignment::V => self.valley,
            Assignment::B => self.boundary,
            Assignment::F => self.flat,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Front,
    Back,
}

/// Drawing primitive in paper coordinates (y up).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Element {
    Polygon {
        points: Vec<Point>,
        fill: Rgb,
        outline: Option<Rgb>,
    },
    Line {
        a: Point,
        b: Point,
        color: Rgb,
    },
}

/// Ordered drawing; later elements paint over earlier ones.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VectorDoc {
    pub background: Rgb,
    pub stroke_width: f64,
    pub elements: Vec<Element>,
}

impl VectorDoc {
    pub fn new(background: Rgb, stroke_width: f64) -> Self {
        VectorDoc {
            background,
            stroke_width,
            elements: Vec::new(),
        }
    }

    fn points(&self) -> impl Iterator<Item = &Point> {
        self.elements.iter().flat_map(|e| match e {
            Element::Polygon { points, .. } => points.iter().collect::<Vec<_>>(),
            Element::Line { a, b, .. } => vec![a, b],
        })
    }

    /// Standalone SVG text at `width`×`height` using the raster framing.
    pub fn to_svg(&self, width: u32, height: u32) -> String {
        let frame = Frame::fit(self, width, height);
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
        );
        let _ = writeln!(
            out,
            r#"<rect x="0" y="0" width="{width}" height="{height}" fill="{}"/>"#,
            css(self.background)
        );
        for e in &self.elements {
            match e {
                Element::Polygon { points, fill, outline } => {
                    let pts: Vec<String> = points
                        .iter()
                        .map(|p| {
                            let q = frame.map(*p);
                            format!("{:.3},{:.3}", q[0], q[1])
                        })
                        .collect();
                    let stroke = match outline {
                        Some(c) => format!(r#" stroke="{}" stroke-width="{}""#, css(*c), self.stroke_width / 2.0),
                        None => String::new(),
                    };
                    let _ = writeln!(
                        out,
                        r#"<polygon points="{}" fill="{}" fill-rule="evenodd"{stroke}/>"#,
                        pts.join(" "),
                        css(*fill)
                    );
                }
                Element::Line { a, b, color } => {
                    let (p, q) = (frame.map(*a), frame.map(*b));
                    let _ = writeln!(
                        out,
                        r#"<line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="{}" stroke-width="{}" stroke-linecap="square"/>"#,
                        p[0],
                        p[1],
                        q[0],
                        q[1],
                        css(*color),
                        self.stroke_width
                    );
                }
            }
        }
        out.push_str("</svg>\n");
        out
    }
}

fn css(c: Rgb) -> String {
    format!("rgb({},{},{})", c[0], c[1], c[2])
}

/// Every edge as a line, in edge index order.
pub fn render_crease_pattern(cp: &CreasePattern, style: &RenderStyle) -> VectorDoc {
    let mut doc = VectorDoc::new(style.background, style.stroke_width);
    for (e, &[a, b]) in cp.edges().iter().enumerate() {
        doc.elements.push(Element::Line {
            a: cp.vertices()[a],
            b: cp.vertices()[b],
            color: style.assignment_color(cp.assignments()[e]),
        });
    }
    doc
}

/// Folded faces painted bottom to top. The back view mirrors x, reverses
/// the stacking and shows the other side of every face.
pub fn render_folded(
    cp: &CreasePattern,
    state: &FoldedState,
    side: Side,
    style: &RenderStyle,
) -> Result<VectorDoc, RenderError> {
    let nf = cp.faces().len();
    if state.stacking.len() != nf || state.face_transforms.len() != nf {
        return Err(RenderError::MissingLayerOrder {
            got: state.stacking.len(),
            want: nf,
        });
    }
    let mut doc = VectorDoc::new(style.background, style.stroke_width);
    let order: Vec<usize> = match side {
        Side::Front => state.stacking.clone(),
        Side::Back => state.stacking.iter().rev().copied().collect(),
    };
    for f in order {
        let t = &state.face_transforms[f];
        let points: Vec<Point> = cp.faces()[f]
            .iter()
            .map(|&v| {
                let p = t.apply(cp.vertices()[v]);
                match side {
                    Side::Front => p,
                    Side::Back => [-p[0], p[1]],
                }
            })
            .collect();
        let front_visible = (side == Side::Front) != state.flipped[f];
        doc.elements.push(Element::Polygon {
            points,
            fill: if front_visible {
                style.front_fill
            } else {
                style.back_fill
            },
            outline: style.face_outline,
        });
    }
    Ok(doc)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum View {
    CreasePattern,
    Front,
    Back,
}

impl std::str::FromStr for View {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cp" | "crease_pattern" => Ok(View::CreasePattern),
            "front" => Ok(View::Front),
            "back" => Ok(View::Back),
            other => Err(format!("unknown view `{other}` (expected cp, front or back)")),
        }
    }
}

pub fn view_document(
    cp: &CreasePattern,
    state: &FoldedState,
    view: View,
    style: &RenderStyle,
) -> Result<VectorDoc, RenderError> {
    match view {
        View::CreasePattern => Ok(render_crease_pattern(cp, style)),
        View::Front => render_folded(cp, state, Side::Front, style),
        View::Back => render_folded(cp, state, Side::Back, style),
    }
}

/// Square raster of one view.
pub fn render_view(
    cp: &CreasePattern,
    state: &FoldedState,
    view: View,
    style: &RenderStyle,
    size: u32,
) -> Result<RasterImage, RenderError> {
    Ok(rasterize(&view_document(cp, state, view, style)?, size, size))
}

/// Paper-to-pixel map: fit the drawing's bounding box inside the margin,
/// keep the aspect ratio, centre it, flip y.
#[derive(Clone, Copy, Debug)]
struct Frame {
    scale: f64,
    min: Point,
    max_y: f64,
    offset: Point,
}

impl Frame {
    fn fit(doc: &VectorDoc, width: u32, height: u32) -> Frame {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in doc.points() {
            lo = [lo[0].min(p[0]), lo[1].min(p[1])];
            hi = [hi[0].max(p[0]), hi[1].max(p[1])];
        }
        if !lo[0].is_finite() {
            lo = [0.0, 0.0];
            hi = [0.0, 0.0];
        }
        let (bw, bh) = (hi[0] - lo[0], hi[1] - lo[1]);
        let avail = [
            (width as f64 - 2.0 * MARGIN_PX).max(1.0),
            (height as f64 - 2.0 * MARGIN_PX).max(1.0),
        ];
        let sx = if bw > 0.0 { avail[0] / bw } else { f64::INFINITY };
        let sy = if bh > 0.0 { avail[1] / bh } else { f64::INFINITY };
        let mut scale = sx.min(sy);
        if !scale.is_finite() {
            scale = 1.0;
        }
        let offset = [(width as f64 - bw * scale) / 2.0, (height as f64 - bh * scale) / 2.0];
        Frame {
            scale,
            min: lo,
            max_y: hi[1],
            offset,
        }
    }

    fn map(&self, p: Point) -> Point {
        [
            self.offset[0] + (p[0] - self.min[0]) * self.scale,
            self.offset[1] + (self.max_y - p[1]) * self.scale,
        ]
    }
}

/// 8-bit RGB image, rows top to bottom.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RasterImage {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<u8>,
}

impl RasterImage {
    pub fn filled(width: u32, height: u32, color: Rgb) -> Self {
        let mut pixels = Vec::with_capacity(3 * width as usize * height as usize);
        for _ in 0..(width as usize * height as usize) {
            pixels.extend_from_slice(&color);
        }
        RasterImage { width, height, pixels }
    }

    pub fn from_pixels(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self, RenderError> {
        let want = 3 * width as usize * height as usize;
        if pixels.len() != want {
            return Err(RenderError::BufferSize {
                got: pixels.len(),
                want,
            });
        }
        Ok(RasterImage { width, height, pixels })
    }

    pub fn get(&self, x: u32, y: u32) -> Rgb {
        let i = 3 * (y as usize * self.width as usize + x as usize);
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn set(&mut self, x: u32, y: u32, c: Rgb) {
        let i = 3 * (y as usize * self.width as usize + x as usize);
        self.pixels[i..i + 3].copy_from_slice(&c);
    }

    pub fn flip_horizontal(&self) -> RasterImage {
        let mut out = self.clone();
        for y in 0..self.height {
            for x in 0..self.width {
                out.set(self.width - 1 - x, y, self.get(x, y));
            }
        }
        out
    }

    /// Places `other` to the right of `self`; the shorter one is padded white.
    pub fn beside(&self, other: &RasterImage) -> RasterImage {
        let h = self.height.max(other.height);
        let mut out = RasterImage::filled(self.width + other.width, h, [255, 255, 255]);
        for y in 0..self.height {
            for x in 0..self.width {
                out.set(x, y, self.get(x, y));
            }
        }
        for y in 0..other.height {
            for x in 0..other.width {
                out.set(self.width + x, y, other.get(x, y));
            }
        }
        out
    }

    pub fn to_png(&self) -> Result<Vec<u8>, RenderError> {
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, self.width, self.height);
            enc.set_color(png::ColorType::Rgb);
            enc.set_depth(png::BitDepth::Eight);
            let mut writer = enc.write_header().map_err(|e| RenderError::Png(e.to_string()))?;
            writer
                .write_image_data(&self.pixels)
                .map_err(|e| RenderError::Png(e.to_string()))?;
        }
        Ok(out)
    }

    /// Decodes an 8-bit RGB or RGBA PNG (alpha is dropped).
    pub fn from_png(bytes: &[u8]) -> Result<RasterImage, RenderError> {
        let decoder = png::Decoder::new(std::io::Cursor::new(bytes));
        let mut reader = decoder.read_info().map_err(|e| RenderError::Png(e.to_string()))?;
        let mut buf = vec![0; reader.output_buffer_size().unwrap_or(0)];
        let info = reader
            .next_frame(&mut buf)
            .map_err(|e| RenderError::Png(e.to_string()))?;
        if info.bit_depth != png::BitDepth::Eight {
            return Err(RenderError::Png(format!("unsupported bit depth {:?}", info.bit_depth)));
        }
        let channels = match info.color_type {
            png::ColorType::Rgb => 3,
            png::ColorType::Rgba => 4,
            other => return Err(RenderError::Png(format!("unsupported color type {other:?}"))),
        };
        let mut pixels = Vec::with_capacity(3 * info.width as usize * info.height as usize);
        for px in buf[..info.buffer_size()].chunks_exact(channels) {
            pixels.extend_from_slice(&px[..3]);
        }
        RasterImage::from_pixels(info.width, info.height, pixels)
    }
}

/// Hard-edged raster of `doc`: even-odd polygon fill sampled at pixel
/// centres, lines drawn as filled quads with square caps.
pub fn rasterize(doc: &VectorDoc, width: u32, height: u32) -> RasterImage {
    let mut img = RasterImage::filled(width, height, doc.background);
    if doc.elements.is_empty() {
        return img;
    }
    let frame = Frame::fit(doc, width, height);
    for e in &doc.elements {
        match e {
            Element::Polygon { points, fill, outline } => {
                let px: Vec<Point> = points.iter().map(|p| frame.map(*p)).collect();
                fill_polygon(&mut img, &px, *fill);
                if let Some(c) = outline {
                    let n = px.len();
                    for i in 0..n {
                        stroke(&mut img, px[i], px[(i + 1) % n], doc.stroke_width / 2.0, *c);
                    }
                }
            }
            Element::Line { a, b, color } => {
                stroke(&mut img, frame.map(*a), frame.map(*b), doc.stroke_width, *color);
            }
        }
    }
    img
}

fn stroke(img: &mut RasterImage, a: Point, b: Point, width: f64, color: Rgb) {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len = dx.hypot(dy);
    if len == 0.0 || width <= 0.0 {
        return;
    }
    let h = width / 2.0;
    let (ux, uy) = (dx / len * h, dy / len * h);
    let (nx, ny) = (-uy, ux);
    let quad = [
        [a[0] - ux + nx, a[1] - uy + ny],
        [b[0] + ux + nx, b[1] + uy + ny],
        [b[0] + ux - nx, b[1] + uy - ny],
        [a[0] - ux - nx, a[1] - uy - ny],
    ];
    fill_polygon(img, &quad, color);
}

/// Even-odd fill; pixel `(i, j)` is painted when its centre is inside.
pub fn fill_polygon(img: &mut RasterImage, poly: &[Point], color: Rgb) {
    let n = poly.len();
    if n < 3 {
        return;
    }
    let (mut y_lo, mut y_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in poly {
        y_lo = y_lo.min(p[1]);
        y_hi = y_hi.max(p[1]);
    }
    let first = ((y_lo - 0.5).ceil().max(0.0)) as i64;
    let last = ((y_hi - 0.5).floor()).min(img.height as f64 - 1.0) as i64;
    let mut xs: Vec<f64> = Vec::new();
    for j in first..=last {
        let yc = j as f64 + 0.5;
        xs.clear();
        for i in 0..n {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            if (a[1] <= yc) != (b[1] <= yc) {
                xs.push(a[0] + (yc - a[1]) * (b[0] - a[0]) / (b[1] - a[1]));
            }
        }
        xs.sort_by(f64::total_cmp);
        for pair in xs.chunks_exact(2) {
            let start = (pair[0] - 0.5).ceil().max(0.0) as i64;
            let end = ((pair[1] - 0.5).ceil() as i64).min(img.width as i64);
            for i in start..end {
                img.set(i as u32, j as u32, color);
            }
        }
    }
}
