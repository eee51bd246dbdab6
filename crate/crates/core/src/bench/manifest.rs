use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::BoundingBox;

/// One template/search pair. Relative image paths are resolved against the
/// manifest's directory when loaded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairManifest {
    pub id: String,
    pub template_image: PathBuf,
    pub search_image: PathBuf,
    pub template_box: BoundingBox,
    pub gt_box: BoundingBox,
}

fn check_box(path: &Path, line: usize, what: &str, b: BoundingBox, image: &Path) -> Result<()> {
    let (w, h) = image::image_dimensions(image).map_err(|source| Error::Image {
        path: image.to_path_buf(),
        source,
    })?;
    if !b.fits_within(w as usize, h as usize) {
        return Err(Error::load(
            path,
            format!("line {line}: {what} {b} is outside the {w}x{h} image {}", image.display()),
        ));
    }
    Ok(())
}

/// Reads a JSON-lines manifest. Blank lines are skipped; every image must
/// exist and contain its box.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<Vec<PairManifest>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut pair: PairManifest = serde_json::from_str(line)
            .map_err(|e| Error::load(path, format!("line {}: {e}", i + 1)))?;
        pair.template_image = base.join(&pair.template_image);
        pair.search_image = base.join(&pair.search_image);
        check_box(path, i + 1, "template box", pair.template_box, &pair.template_image)?;
        check_box(path, i + 1, "ground-truth box", pair.gt_box, &pair.search_image)?;
        pairs.push(pair);
    }
    Ok(pairs)
}

/// Writes pairs as JSON lines, paths as given.
pub fn write_manifest(path: impl AsRef<Path>, pairs: &[PairManifest]) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::new();
    for p in pairs {
        serde_json::to_writer(&mut out, p).expect("manifest entries serialize");
        out.push(b'\n');
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&out).map_err(|e| Error::io(path, e))
}

/// Boxes from a ground-truth text file: one box per line as `x,y,w,h`
/// (commas, tabs or spaces). With `one_based`, coordinates count from 1
/// and are shifted to 0-based.
pub fn load_gt_boxes(path: impl AsRef<Path>, one_based: bool) -> Result<Vec<BoundingBox>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut boxes = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != 4 {
            return Err(Error::load(path, format!("line {}: expected 4 values, got {}", i + 1, fields.len())));
        }
        let mut v = [0i64; 4];
        for (slot, f) in v.iter_mut().zip(&fields) {
            // Some tools write integral coordinates as floats.
            let x: f64 = f
                .parse()
                .map_err(|_| Error::load(path, format!("line {}: '{f}' is not a number", i + 1)))?;
            *slot = x.round() as i64;
        }
        if one_based {
            v[0] -= 1;
            v[1] -= 1;
        }
        boxes.push(BoundingBox::from_xywh(v).map_err(|e| Error::load(path, format!("line {}: {e}", i + 1)))?);
    }
    Ok(boxes)
}

/// A pair whose ground-truth file holds the template box on its first line
/// and the target box on its second.
pub fn pair_from_gt_file(
    id: impl Into<String>,
    template_image: impl Into<PathBuf>,
    search_image: impl Into<PathBuf>,
    gt_file: impl AsRef<Path>,
    one_based: bool,
) -> Result<PairManifest> {
    let gt_file = gt_file.as_ref();
    let boxes = load_gt_boxes(gt_file, one_based)?;
    if boxes.len() < 2 {
        return Err(Error::load(gt_file, format!("expected 2 boxes, found {}", boxes.len())));
    }
    Ok(PairManifest {
        id: id.into(),
        template_image: template_image.into(),
        search_image: search_image.into(),
        template_box: boxes[0],
        gt_box: boxes[1],
    })
}
