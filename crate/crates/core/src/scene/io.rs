use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{check_dims, netpbm, CrowdScene, HeadPoint};
use crate::error::{invalid, Result};
use crate::tensornet::{Shape, Tensor};
use crate::Error;

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum ImageField {
    Path(String),
    /// One row-major array per channel.
    Inline(Vec<Vec<f64>>),
}

#[derive(Debug, Serialize, Deserialize)]
struct AnnotationFile {
    id: String,
    width: usize,
    height: usize,
    image: ImageField,
    heads: Vec<[f64; 2]>,
}

/// How [`save_scene`] stores the image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ImageStorage {
    Inline,
    /// A 16-bit PGM/PPM written next to the annotation, under this file name.
    Netpbm(String),
}

/// Reads and validates an annotation JSON file. Relative image paths are
/// resolved against the annotation's directory.
pub fn load_scene(annotation_file: impl AsRef<Path>) -> Result<CrowdScene> {
    let path = annotation_file.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let ann: AnnotationFile = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
    check_dims(ann.width, ann.height)?;
    let image = match ann.image {
        ImageField::Inline(channels) => {
            let plane = ann.width * ann.height;
            if channels.is_empty() || channels.iter().any(|c| c.len() != plane) {
                return Err(invalid!(
                    "{}: inline image must be channel arrays of {plane} values",
                    path.display()
                ));
            }
            let n = channels.len();
            Tensor::from_vec(Shape::new(n, ann.height, ann.width), channels.concat())?
        }
        ImageField::Path(p) => {
            let base = path.parent().unwrap_or(Path::new("."));
            let img = netpbm::read(&base.join(p))?;
            let s = img.shape();
            if (s.width, s.height) != (ann.width, ann.height) {
                return Err(invalid!(
                    "{}: image is {}x{} but annotation says {}x{}",
                    path.display(),
                    s.width,
                    s.height,
                    ann.width,
                    ann.height
                ));
            }
            img
        }
    };
    if image.data().iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(invalid!("{}: image values must lie in [0, 1]", path.display()));
    }
    let heads = ann.heads.iter().map(|&[x, y]| HeadPoint::new(x, y)).collect();
    CrowdScene::new(ann.id, image, heads)
}

/// Writes `scene` as an annotation JSON file at `annotation_file`.
pub fn save_scene(scene: &CrowdScene, annotation_file: impl AsRef<Path>, storage: &ImageStorage) -> Result<()> {
    let path = annotation_file.as_ref();
    let image = match storage {
        ImageStorage::Inline => {
            let n = scene.image().shape().channels;
            ImageField::Inline((0..n).map(|c| scene.image().channel(c).to_vec()).collect())
        }
        ImageStorage::Netpbm(name) => {
            let base = path.parent().unwrap_or(Path::new("."));
            netpbm::write(&base.join(name), scene.image())?;
            ImageField::Path(name.clone())
        }
    };
    let ann = AnnotationFile {
        id: scene.id().to_string(),
        width: scene.width(),
        height: scene.height(),
        image,
        heads: scene.heads().iter().map(|p| [p.x, p.y]).collect(),
    };
    let text = serde_json::to_string(&ann).map_err(|e| Error::json(path, e))?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// `manifest.json`: annotation file names per split, relative to the dataset directory.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub train: Vec<String>,
    pub test: Vec<String>,
}

#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub root: PathBuf,
    pub train: Vec<CrowdScene>,
    pub test: Vec<CrowdScene>,
}

pub fn load_dataset(dir: impl AsRef<Path>) -> Result<Dataset> {
    let root = dir.as_ref().to_path_buf();
    let manifest_path = root.join("manifest.json");
    let text = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| Error::json(&manifest_path, e))?;
    let load = |names: &[String]| -> Result<Vec<CrowdScene>> { names.iter().map(|n| load_scene(root.join(n))).collect() };
    Ok(Dataset {
        train: load(&manifest.train)?,
        test: load(&manifest.test)?,
        root,
    })
}

/// Writes every scene (PGM/PPM images alongside) plus the manifest.
pub fn save_dataset(dir: impl AsRef<Path>, train: &[CrowdScene], test: &[CrowdScene]) -> Result<Manifest> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = Manifest::default();
    for (scenes, names) in [(train, &mut manifest.train), (test, &mut manifest.test)] {
        for scene in scenes {
            let ext = if scene.image().shape().channels == 1 { "pgm" } else { "ppm" };
            let json = format!("{}.json", scene.id());
            save_scene(scene, dir.join(&json), &ImageStorage::Netpbm(format!("{}.{ext}", scene.id())))?;
            names.push(json);
        }
    }
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::json(&path, e))?;
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, body).unwrap();
        p
    }

    fn inline(w: usize, h: usize) -> String {
        let plane: Vec<String> = (0..w * h).map(|i| format!("{}", (i % 7) as f64 / 7.0)).collect();
        format!("[[{}]]", plane.join(","))
    }

    #[test]
    fn empty_annotation() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "a.json",
            &format!(r#"{{"id":"a","width":64,"height":64,"image":{},"heads":[]}}"#, inline(64, 64)),
        );
        let s = load_scene(&p).unwrap();
        assert_eq!(s.count(), 0);
        assert_eq!((s.width(), s.height()), (64, 64));
    }

    #[test]
    fn sub_pixel_heads_retained() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "b.json",
            &format!(
                r#"{{"id":"b","width":64,"height":64,"image":{},"heads":[[10,20],[63.5,0]]}}"#,
                inline(64, 64)
            ),
        );
        let s = load_scene(&p).unwrap();
        assert_eq!(s.heads(), &[HeadPoint::new(10.0, 20.0), HeadPoint::new(63.5, 0.0)]);
    }

    #[test]
    fn rejects_bad_files() {
        let dir = tempfile::tempdir().unwrap();
        let img = inline(64, 64);
        let oob = write(
            dir.path(),
            "c.json",
            &format!(r#"{{"id":"c","width":64,"height":64,"image":{img},"heads":[[64,10]]}}"#),
        );
        assert!(load_scene(&oob).unwrap_err().is_validation());
        let dims = write(
            dir.path(),
            "d.json",
            &format!(r#"{{"id":"d","width":60,"height":64,"image":{},"heads":[]}}"#, inline(60, 64)),
        );
        assert!(load_scene(&dims).unwrap_err().is_validation());
        let junk = write(dir.path(), "e.json", "{not json");
        assert!(matches!(load_scene(&junk), Err(Error::Json { .. })));
        let short = write(
            dir.path(),
            "f.json",
            r#"{"id":"f","width":16,"height":16,"image":[[0.5]],"heads":[]}"#,
        );
        assert!(load_scene(&short).is_err());
        assert!(matches!(load_scene(dir.path().join("missing.json")), Err(Error::Io { .. })));
    }

    #[test]
    fn netpbm_round_trip_grayscale_and_rgb() {
        let dir = tempfile::tempdir().unwrap();
        for channels in [1, 3] {
            let image = Tensor::from_fn(Shape::new(channels, 16, 32), |c, y, x| {
                ((c * 31 + y * 7 + x * 3) % 101) as f64 / 100.0
            });
            let scene = CrowdScene::new("p", image.clone(), vec![HeadPoint::new(3.25, 9.5)]).unwrap();
            let json = dir.path().join(format!("p{channels}.json"));
            save_scene(&scene, &json, &ImageStorage::Netpbm(format!("p{channels}.img"))).unwrap();
            let back = load_scene(&json).unwrap();
            assert_eq!(back.heads(), scene.heads());
            assert_eq!(back.image().shape(), image.shape());
            for (a, b) in back.image().data().iter().zip(image.data()) {
                assert!((a - b).abs() <= 0.5 / 65535.0 + 1e-12);
            }
        }
    }
}
