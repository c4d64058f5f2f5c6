use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::ffield::Point;

use super::flat::{enumerate_flats, Ambient, Flat};

/// Upper bound on `q^d * (lines through a point)` for which an index is built.
const MAX_ENTRIES: usize = 40_000_000;

const NONE: u32 = u32::MAX;

/// Point/line/plane incidences of one ambient space, as fixed-stride tables
/// of ambient point indices and flat ids. Flat ids follow canonical order.
///
/// For `d = 2` the plane tables are empty and lines are the hyperplanes.
#[derive(Debug)]
pub struct Incidence {
    ambient: Ambient,
    lines: Vec<Flat>,
    planes: Vec<Flat>,
    line_pts: Vec<u32>,
    plane_pts: Vec<u32>,
    pt_lines: Vec<u32>,
    pt_planes: Vec<u32>,
    line_planes: Vec<u32>,
    plane_lines: Vec<u32>,
    /// Ambient index of a normalized nonzero vector -> projective id.
    proj: Vec<u32>,
    /// `proj(direction) * q^d + base index` -> line id.
    line_lookup: Vec<u32>,
    /// `proj(normal) * q + constant` -> plane id.
    plane_lookup: Vec<u32>,
}

/// The shared incidence index for `ambient`, built on first use.
pub fn incidence(ambient: Ambient) -> Result<Arc<Incidence>> {
    static CACHE: OnceLock<Mutex<HashMap<Ambient, Arc<Incidence>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    if let Some(inc) = guard.get(&ambient) {
        return Ok(Arc::clone(inc));
    }
    let inc = Arc::new(Incidence::build(ambient)?);
    guard.insert(ambient, Arc::clone(&inc));
    Ok(inc)
}

fn normalize(q: u32, v: &mut [u32]) -> bool {
    let Some(&lead) = v.iter().find(|&&x| x != 0) else {
        return false;
    };
    if lead != 1 {
        let inv = crate::ffield::PrimeField::new(q)
            .expect("ambient modulus is prime")
            .inv(lead)
            .expect("nonzero");
        for x in v.iter_mut() {
            *x = *x * inv % q;
        }
    }
    true
}

impl Incidence {
    fn build(ambient: Ambient) -> Result<Self> {
        let q = ambient.q() as usize;
        let d = ambient.dim();
        let n = ambient.size();
        let through_point = (n - 1) / (q - 1);
        if n.saturating_mul(through_point) > MAX_ENTRIES {
            return Err(Error::TooLarge(format!(
                "incidence index for F_{q}^{d} has more than {MAX_ENTRIES} entries"
            )));
        }

        let mut proj = vec![NONE; n];
        let mut n_proj = 0u32;
        for idx in 1..n {
            let c = Point::from_index(q as u32, d, idx).coords();
            if c.iter().find(|&&x| x != 0) == Some(&1) {
                proj[idx] = n_proj;
                n_proj += 1;
            }
        }

        let lines = enumerate_flats(ambient, 1)?;
        let mut line_pts = Vec::with_capacity(lines.len() * q);
        let mut line_lookup = vec![NONE; n_proj as usize * n];
        for (id, l) in lines.iter().enumerate() {
            let dir = Point::from_reduced(&l.directions()[0]).index(q as u32);
            line_lookup[proj[dir] as usize * n + l.base().index(q as u32)] = id as u32;
            line_pts.extend(l.points().iter().map(|p| p.index(q as u32) as u32));
        }
        let pt_lines = invert(&line_pts, q, n, through_point);

        let mut inc = Self {
            ambient,
            lines,
            planes: Vec::new(),
            line_pts,
            plane_pts: Vec::new(),
            pt_lines,
            pt_planes: Vec::new(),
            line_planes: Vec::new(),
            plane_lines: Vec::new(),
            proj,
            line_lookup,
            plane_lookup: Vec::new(),
        };
        if d == 3 {
            inc.build_planes();
        }
        Ok(inc)
    }

    fn build_planes(&mut self) {
        let q = self.ambient.q() as usize;
        let n = self.ambient.size();
        let planes = enumerate_flats(self.ambient, 2).expect("d = 3");
        let mut plane_pts = Vec::with_capacity(planes.len() * q * q);
        let mut plane_lookup = vec![NONE; (q * q + q + 1) * q];
        for (id, p) in planes.iter().enumerate() {
            let dirs = p.directions();
            let (u, v) = (&dirs[0], &dirs[1]);
            let mut normal = cross(q as u32, u, v);
            normalize(q as u32, &mut normal);
            let b = p.base().coords();
            let k = dot(q as u32, &normal, &b);
            let key = self.proj[Point::from_reduced(&normal).index(q as u32)] as usize;
            plane_lookup[key * q + k as usize] = id as u32;
            plane_pts.extend(p.points().iter().map(|x| x.index(q as u32) as u32));
        }
        let pt_planes = invert(&plane_pts, q * q, n, q * q + q + 1);

        let stride = q * q + q + 1;
        let mut line_planes = Vec::with_capacity(self.lines.len() * (q + 1));
        for l in 0..self.lines.len() {
            let pts = &self.line_pts[l * q..l * q + 2];
            let a = &pt_planes[pts[0] as usize * stride..][..stride];
            let b = &pt_planes[pts[1] as usize * stride..][..stride];
            let before = line_planes.len();
            let (mut i, mut j) = (0, 0);
            while i < a.len() && j < b.len() {
                match a[i].cmp(&b[j]) {
                    std::cmp::Ordering::Less => i += 1,
                    std::cmp::Ordering::Greater => j += 1,
                    std::cmp::Ordering::Equal => {
                        line_planes.push(a[i]);
                        i += 1;
                        j += 1;
                    }
                }
            }
            debug_assert_eq!(line_planes.len() - before, q + 1);
        }
        let plane_lines = invert(&line_planes, q + 1, planes.len(), q * q + q);

        self.planes = planes;
        self.plane_pts = plane_pts;
        self.pt_planes = pt_planes;
        self.line_planes = line_planes;
        self.plane_lines = plane_lines;
        self.plane_lookup = plane_lookup;
    }

    pub fn ambient(&self) -> Ambient {
        self.ambient
    }

    pub fn lines(&self) -> &[Flat] {
        &self.lines
    }

    pub fn planes(&self) -> &[Flat] {
        &self.planes
    }

    #[inline]
    pub fn line_points(&self, line: usize) -> &[u32] {
        let q = self.ambient.q() as usize;
        &self.line_pts[line * q..(line + 1) * q]
    }

    #[inline]
    pub fn plane_points(&self, plane: usize) -> &[u32] {
        let s = (self.ambient.q() as usize).pow(2);
        &self.plane_pts[plane * s..(plane + 1) * s]
    }

    #[inline]
    pub fn point_lines(&self, point: usize) -> &[u32] {
        let s = (self.ambient.size() - 1) / (self.ambient.q() as usize - 1);
        &self.pt_lines[point * s..(point + 1) * s]
    }

    #[inline]
    pub fn point_planes(&self, point: usize) -> &[u32] {
        let q = self.ambient.q() as usize;
        let s = q * q + q + 1;
        &self.pt_planes[point * s..(point + 1) * s]
    }

    #[inline]
    pub fn line_planes(&self, line: usize) -> &[u32] {
        let s = self.ambient.q() as usize + 1;
        &self.line_planes[line * s..(line + 1) * s]
    }

    #[inline]
    pub fn plane_lines(&self, plane: usize) -> &[u32] {
        let q = self.ambient.q() as usize;
        let s = q * q + q;
        &self.plane_lines[plane * s..(plane + 1) * s]
    }

    /// Hyperplanes are planes for `d = 3` and lines for `d = 2`.
    pub fn num_hyperplanes(&self) -> usize {
        if self.ambient.dim() == 3 {
            self.planes.len()
        } else {
            self.lines.len()
        }
    }

    pub fn hyperplane_points(&self, h: usize) -> &[u32] {
        if self.ambient.dim() == 3 {
            self.plane_points(h)
        } else {
            self.line_points(h)
        }
    }

    pub fn point_hyperplanes(&self, point: usize) -> &[u32] {
        if self.ambient.dim() == 3 {
            self.point_planes(point)
        } else {
            self.point_lines(point)
        }
    }

    /// Id of the line through two distinct points (ambient indices).
    #[inline]
    pub fn line_of(&self, a: usize, b: usize) -> usize {
        let q = self.ambient.q();
        let d = self.ambient.dim();
        let pa = Point::from_index(q, d, a);
        let pb = Point::from_index(q, d, b);
        let mut dir = [0u32; 3];
        for j in 0..d {
            dir[j] = (pb.coord(j) + q - pa.coord(j)) % q;
        }
        normalize(q, &mut dir[..d]);
        let lead = (0..d).find(|&j| dir[j] != 0).expect("distinct points");
        let t = pa.coord(lead);
        let mut base = [0u32; 3];
        for j in 0..d {
            base[j] = (pa.coord(j) + q - t * dir[j] % q) % q;
        }
        let di = Point::from_reduced(&dir[..d]).index(q);
        let bi = Point::from_reduced(&base[..d]).index(q);
        self.line_lookup[self.proj[di] as usize * self.ambient.size() + bi] as usize
    }

    /// Id of the plane through three points, or `None` when they are collinear.
    #[inline]
    pub fn plane_of(&self, a: usize, b: usize, c: usize) -> Option<usize> {
        debug_assert_eq!(self.ambient.dim(), 3);
        let q = self.ambient.q();
        let pa = Point::from_index(q, 3, a);
        let pb = Point::from_index(q, 3, b);
        let pc = Point::from_index(q, 3, c);
        let u: Vec<u32> = (0..3).map(|j| (pb.coord(j) + q - pa.coord(j)) % q).collect();
        let v: Vec<u32> = (0..3).map(|j| (pc.coord(j) + q - pa.coord(j)) % q).collect();
        let mut normal = cross(q, &u, &v);
        if !normalize(q, &mut normal) {
            return None;
        }
        let k = dot(q, &normal, &pa.coords());
        let key = self.proj[Point::from_reduced(&normal).index(q)] as usize;
        Some(self.plane_lookup[key * q as usize + k as usize] as usize)
    }

    /// Position of ambient point `p` within `line_points(line)`.
    #[inline]
    pub fn position_on_line(&self, line: usize, p: u32) -> usize {
        self.line_points(line)
            .binary_search(&p)
            .expect("point lies on the line")
    }
}

fn cross(q: u32, u: &[u32], v: &[u32]) -> Vec<u32> {
    let m = |a: u32, b: u32| a * b % q;
    let s = |a: u32, b: u32| (a + q - b) % q;
    vec![
        s(m(u[1], v[2]), m(u[2], v[1])),
        s(m(u[2], v[0]), m(u[0], v[2])),
        s(m(u[0], v[1]), m(u[1], v[0])),
    ]
}

fn dot(q: u32, a: &[u32], b: &[u32]) -> u32 {
    a.iter().zip(b).fold(0, |acc, (&x, &y)| (acc + x * y) % q)
}

/// Inverts a fixed-stride `flat -> members` table into `member -> flats`.
fn invert(table: &[u32], stride: usize, members: usize, out_stride: usize) -> Vec<u32> {
    let mut fill = vec![0usize; members];
    let mut out = vec![NONE; members * out_stride];
    for (f, row) in table.chunks_exact(stride).enumerate() {
        for &m in row {
            let m = m as usize;
            out[m * out_stride + fill[m]] = f as u32;
            fill[m] += 1;
        }
    }
    debug_assert!(fill.iter().all(|&c| c == out_stride));
    out
}
