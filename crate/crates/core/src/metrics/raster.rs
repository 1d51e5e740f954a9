use crate::annotate::PageAnnotation;
use crate::error::{Error, Result};
use crate::region::BACKGROUND;

/// Dense per-pixel class ids, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelGrid {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<u8>,
}

impl LabelGrid {
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.labels[y * self.width + x]
    }

    pub fn count(&self, label: u8) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }
}

/// Fill region polygons at pixel centres (even-odd rule) on a grid downscaled
/// by the integer factor `scale`. Larger regions are drawn first so smaller
/// ones win where they overlap.
pub fn rasterize(page: &PageAnnotation, scale: u32) -> Result<LabelGrid> {
    if scale == 0 {
        return Err(Error::InvalidInput("rasterization scale must be positive".into()));
    }
    if page.width == 0 || page.height == 0 {
        return Err(Error::InvalidInput(format!("page `{}` has zero area", page.image)));
    }
    let s = scale as f64;
    let width = page.width.div_ceil(scale) as usize;
    let height = page.height.div_ceil(scale) as usize;
    let mut labels = vec![BACKGROUND; width * height];

    let mut order: Vec<(f64, usize)> = page
        .regions
        .iter()
        .enumerate()
        .map(|(i, r)| (r.polygon.area(), i))
        .collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    for (_, i) in order {
        let region = &page.regions[i];
        let label = region.region_type.label();
        let bb = region.polygon.bbox();
        let row0 = ((bb.y0 / s - 0.5).floor().max(0.0)) as usize;
        let row1 = ((bb.y1 / s).ceil() as usize).min(height);
        for row in row0..row1 {
            let y = (row as f64 + 0.5) * s;
            for (a, b) in region.polygon.row_intervals(y) {
                // Columns whose centre x = (col + 0.5) * s lies in [a, b).
                let c0 = (a / s - 0.5).ceil().max(0.0) as usize;
                let c1 = ((b / s - 0.5).ceil().max(0.0) as usize).min(width);
                if c0 < c1 {
                    labels[row * width + c0..row * width + c1].fill(label);
                }
            }
        }
    }
    Ok(LabelGrid { width, height, labels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotate::{RegionGeometry, Source};
    use crate::geom::BBox;
    use crate::region::RegionType;
    use proptest::prelude::*;

    fn page(w: u32, h: u32, regions: &[(RegionType, BBox)]) -> PageAnnotation {
        PageAnnotation {
            image: "p".into(),
            width: w,
            height: h,
            regions: regions
                .iter()
                .map(|(t, b)| RegionGeometry {
                    region_type: *t,
                    polygon: b.to_polygon(),
                    source: Source::Manual,
                    checked: false,
                    score: None,
                })
                .collect(),
        }
    }

    #[test]
    fn full_page_rectangle() {
        let p = page(8, 6, &[(RegionType::Body, BBox::new(0.0, 0.0, 8.0, 6.0))]);
        let g = rasterize(&p, 1).unwrap();
        assert_eq!(g.count(RegionType::Body.label()), 48);
    }

    #[test]
    fn empty_annotation_is_background() {
        let g = rasterize(&page(5, 5, &[]), 1).unwrap();
        assert_eq!(g.count(BACKGROUND), 25);
    }

    #[test]
    fn zero_area_page_is_an_error() {
        assert!(rasterize(&page(0, 5, &[]), 1).is_err());
    }

    #[test]
    fn smaller_region_wins() {
        let p = page(
            20,
            20,
            &[
                (RegionType::PageNum, BBox::new(8.0, 0.0, 12.0, 3.0)),
                (RegionType::Body, BBox::new(0.0, 0.0, 20.0, 20.0)),
            ],
        );
        let g = rasterize(&p, 1).unwrap();
        // Body covers 400 pixels, of which the 4x3 page number box takes 12.
        assert_eq!(g.count(RegionType::PageNum.label()), 12);
        assert_eq!(g.count(RegionType::Body.label()), 388);
        assert_eq!(g.get(9, 1), RegionType::PageNum.label());
        assert_eq!(g.get(9, 5), RegionType::Body.label());
    }

    #[test]
    fn downscaled_grid() {
        let p = page(10, 10, &[(RegionType::Note, BBox::new(0.0, 0.0, 4.0, 4.0))]);
        let g = rasterize(&p, 4).unwrap();
        assert_eq!((g.width, g.height), (3, 3));
        assert_eq!(g.count(RegionType::Note.label()), 1);
    }

    proptest! {
        #[test]
        fn rectangle_area_equals_pixel_count(x in 0u32..30, y in 0u32..30, w in 0u32..30, h in 0u32..30) {
            let b = BBox::new(x as f64, y as f64, (x + w) as f64, (y + h) as f64);
            let p = page(64, 64, &[(RegionType::Body, b)]);
            let g = rasterize(&p, 1).unwrap();
            prop_assert_eq!(g.count(RegionType::Body.label()) as f64, b.area());
        }
    }
}
