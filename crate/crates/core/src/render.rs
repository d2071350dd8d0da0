//! Still images of environment states: binary PPM (P6) rasters for grid-like
//! environments, SVG for the routing problems.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::env::Environment;
use crate::envs::{
    CubeState, Cvrp, CvrpState, Game2048, Game2048State, JobShop, JobShopState, Knapsack, KnapsackState, Maze,
    MazeState, PuzzleState, RubiksCube, SlidingTilePuzzle, Snake, SnakeState, Tsp, TspState,
};
use crate::error::Result;
use crate::generators::Point;
use crate::io::write_atomic;

/// Side of one grid cell in pixels.
pub const CELL_PX: usize = 16;
/// Side of the SVG canvas.
pub const SVG_SIZE: f64 = 512.0;

type Rgb = [u8; 3];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<Rgb>,
}

impl Raster {
    pub fn new(width: usize, height: usize, fill: Rgb) -> Self {
        Self { width, height, pixels: vec![fill; width * height] }
    }

    /// A `cols x rows` grid of `CELL_PX` cells.
    pub fn from_cells(rows: usize, cols: usize, cell: impl Fn(usize, usize) -> Rgb) -> Self {
        let mut r = Self::new(cols * CELL_PX, rows * CELL_PX, [0, 0, 0]);
        for row in 0..rows {
            for col in 0..cols {
                r.fill_cell(row, col, cell(row, col));
            }
        }
        r
    }

    fn fill_cell(&mut self, row: usize, col: usize, c: Rgb) {
        for y in row * CELL_PX..(row + 1) * CELL_PX {
            let start = y * self.width + col * CELL_PX;
            self.pixels[start..start + CELL_PX].fill(c);
        }
    }

    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.reserve(self.pixels.len() * 3);
        for p in &self.pixels {
            out.extend_from_slice(p);
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Image {
    Raster(Raster),
    Svg(String),
}

impl Image {
    pub fn extension(&self) -> &'static str {
        match self {
            Image::Raster(_) => "ppm",
            Image::Svg(_) => "svg",
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        match self {
            Image::Raster(r) => r.to_ppm(),
            Image::Svg(s) => s.clone().into_bytes(),
        }
    }

    /// Writes `<stem>.<ext>` atomically and returns the path.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<PathBuf> {
        let path = dir.join(format!("{stem}.{}", self.extension()));
        write_atomic(&path, &self.to_bytes())?;
        Ok(path)
    }
}

pub trait Render: Environment {
    fn render(&self, state: &Self::State) -> Image;
}

const BLACK: Rgb = [0, 0, 0];
const WHITE: Rgb = [255, 255, 255];

fn lerp(a: Rgb, b: Rgb, t: f64) -> Rgb {
    let t = t.clamp(0.0, 1.0);
    [0, 1, 2].map(|i| (a[i] as f64 + (b[i] as f64 - a[i] as f64) * t).round() as u8)
}

fn hue(i: usize) -> Rgb {
    const PALETTE: [Rgb; 8] = [
        [230, 25, 75],
        [60, 180, 75],
        [0, 130, 200],
        [245, 130, 48],
        [145, 30, 180],
        [70, 240, 240],
        [240, 50, 230],
        [210, 245, 60],
    ];
    PALETTE[i % PALETTE.len()]
}

impl Render for Game2048 {
    fn render(&self, s: &Game2048State) -> Image {
        Image::Raster(Raster::from_cells(4, 4, |r, c| match s.board[r * 4 + c] {
            0 => [205, 193, 180],
            v => lerp([238, 228, 218], [237, 80, 40], (v as f64).log2() / 11.0),
        }))
    }
}

impl Render for RubiksCube {
    /// Unfolded net: up on top, then left, front, right, back, then down.
    fn render(&self, s: &CubeState) -> Image {
        const COLOURS: [Rgb; 6] = [[255, 255, 255], [0, 155, 72], [183, 18, 52], [0, 70, 173], [255, 88, 0], [255, 213, 0]];
        let n = self.cube_size();
        let origin = [(0, n), (n, n), (n, 2 * n), (n, 3 * n), (n, 0), (2 * n, n)];
        let mut img = Raster::new(4 * n * CELL_PX, 3 * n * CELL_PX, [40, 40, 40]);
        for (face, &(r0, c0)) in origin.iter().enumerate() {
            for r in 0..n {
                for c in 0..n {
                    img.fill_cell(r0 + r, c0 + c, COLOURS[s.stickers[(face * n + r) * n + c] as usize]);
                }
            }
        }
        Image::Raster(img)
    }
}

impl Render for SlidingTilePuzzle {
    fn render(&self, s: &PuzzleState) -> Image {
        let g = self.grid_size();
        let cells = (g * g) as f64;
        Image::Raster(Raster::from_cells(g, g, |r, c| {
            let t = s.tiles[r * g + c] as usize;
            if t == 0 {
                BLACK
            } else if t == r * g + c + 1 {
                lerp([40, 120, 40], [160, 230, 160], t as f64 / cells)
            } else {
                lerp([60, 60, 140], [170, 170, 240], t as f64 / cells)
            }
        }))
    }
}

impl Render for Maze {
    fn render(&self, s: &MazeState) -> Image {
        let cols = self.cols();
        Image::Raster(Raster::from_cells(self.rows(), cols, |r, c| {
            if (r, c) == s.agent {
                [30, 90, 230]
            } else if (r, c) == s.target {
                [220, 40, 40]
            } else if s.walls[r * cols + c] {
                [30, 30, 30]
            } else {
                WHITE
            }
        }))
    }
}

impl Render for Snake {
    fn render(&self, s: &SnakeState) -> Image {
        let g = self.grid_size();
        let mut cells = vec![BLACK; g * g];
        let len = s.body.len().max(2) as f64;
        for (k, &cell) in s.body.iter().enumerate().rev() {
            cells[cell as usize] = lerp([40, 240, 60], [20, 110, 30], k as f64 / (len - 1.0));
        }
        if !s.body.contains(&s.fruit) {
            cells[s.fruit as usize] = [230, 30, 30];
        }
        Image::Raster(Raster::from_cells(g, g, |r, c| cells[r * g + c]))
    }
}

impl Render for Knapsack {
    /// One column per item: top cell shades by value density, bottom cell is
    /// lit when the item is packed.
    fn render(&self, s: &KnapsackState) -> Image {
        let max_density = s.weights.iter().zip(&s.values).map(|(w, v)| v / w).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        Image::Raster(Raster::from_cells(2, s.weights.len(), |r, c| match r {
            0 => lerp([30, 30, 60], [250, 200, 40], s.values[c] / s.weights[c] / max_density),
            _ if s.packed[c] => [60, 200, 90],
            _ => [50, 50, 50],
        }))
    }
}

impl Render for JobShop {
    /// One row per job, one column per operation, coloured by machine; finished
    /// operations are grey and running ones are drawn full brightness.
    fn render(&self, s: &JobShopState) -> Image {
        let jobs = s.machines_required.len();
        let ops = s.machines_required.iter().map(Vec::len).max().unwrap_or(0).max(1);
        Image::Raster(Raster::from_cells(jobs, ops, |j, k| {
            let Some(&m) = s.machines_required[j].get(k) else { return BLACK };
            let base = hue(m);
            if k < s.op_index[j] {
                [110, 110, 110]
            } else if k == s.op_index[j] && s.machine_job[m] == Some(j) {
                base
            } else {
                lerp(base, BLACK, 0.6)
            }
        }))
    }
}

fn svg_point(p: Point) -> (f64, f64) {
    let pad = 24.0;
    let span = SVG_SIZE - 2.0 * pad;
    (pad + p[0] * span, pad + (1.0 - p[1]) * span)
}

fn svg_open(s: &mut String) {
    let _ = write!(
        s,
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{0}\" height=\"{0}\" viewBox=\"0 0 {0} {0}\">\n<rect width=\"{0}\" height=\"{0}\" fill=\"white\"/>\n",
        SVG_SIZE
    );
}

fn svg_path(s: &mut String, coords: &[Point], order: &[usize], colour: &str) {
    if order.len() < 2 {
        return;
    }
    let pts: Vec<String> = order.iter().map(|&i| {
        let (x, y) = svg_point(coords[i]);
        format!("{x:.2},{y:.2}")
    }).collect();
    let _ = writeln!(s, "<polyline points=\"{}\" fill=\"none\" stroke=\"{colour}\" stroke-width=\"2\"/>", pts.join(" "));
}

impl Render for Tsp {
    fn render(&self, s: &TspState) -> Image {
        let mut out = String::new();
        svg_open(&mut out);
        let mut order = s.trajectory.clone();
        if s.done && !order.is_empty() {
            order.push(order[0]);
        }
        svg_path(&mut out, &s.coordinates, &order, "#1f5fbf");
        for (i, &p) in s.coordinates.iter().enumerate() {
            let (x, y) = svg_point(p);
            let fill = if s.position == Some(i) { "#d62728" } else if s.visited[i] { "#1f5fbf" } else { "#888888" };
            let _ = writeln!(out, "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"5\" fill=\"{fill}\"/>");
        }
        out.push_str("</svg>\n");
        Image::Svg(out)
    }
}

impl Render for Cvrp {
    fn render(&self, s: &CvrpState) -> Image {
        let mut out = String::new();
        svg_open(&mut out);
        let mut order = vec![0];
        order.extend_from_slice(&s.route);
        svg_path(&mut out, &s.coordinates, &order, "#2ca02c");
        let max_demand = s.demands.iter().copied().max().unwrap_or(1).max(1) as f64;
        for (i, &p) in s.coordinates.iter().enumerate() {
            let (x, y) = svg_point(p);
            if i == 0 {
                let _ = writeln!(out, "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"12\" height=\"12\" fill=\"#000000\"/>", x - 6.0, y - 6.0);
                continue;
            }
            let r = 3.0 + 4.0 * s.demands[i] as f64 / max_demand;
            let fill = if s.position == i { "#d62728" } else if s.visited[i] { "#2ca02c" } else { "#888888" };
            let _ = writeln!(out, "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"{r:.2}\" fill=\"{fill}\"/>");
        }
        let _ = writeln!(
            out,
            "<text x=\"8\" y=\"16\" font-family=\"monospace\" font-size=\"12\">load {}/{}</text>",
            s.capacity - s.remaining_capacity,
            s.capacity
        );
        out.push_str("</svg>\n");
        Image::Svg(out)
    }
}
