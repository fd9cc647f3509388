//! Non-overlapping square tiling of an image.

use crate::pgm::Pgm;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImagePatchSet {
    pub width: usize,
    pub height: usize,
    pub patch: usize,
    pub maxval: u8,
    /// Row-major patch order; each patch is row-major `patch × patch` samples.
    pub patches: Vec<Vec<u8>>,
}

impl ImagePatchSet {
    pub fn split(img: &Pgm, patch: usize) -> Result<Self, String> {
        if patch == 0 {
            return Err("patch size must be positive".into());
        }
        if img.width % patch != 0 || img.height % patch != 0 {
            return Err(format!(
                "image is {}x{}, not a multiple of the {patch}-pixel patch size; crop to {}x{}",
                img.width,
                img.height,
                img.width / patch * patch,
                img.height / patch * patch
            ));
        }
        let mut patches = Vec::with_capacity((img.width / patch) * (img.height / patch));
        for pr in 0..img.height / patch {
            for pc in 0..img.width / patch {
                let mut p = Vec::with_capacity(patch * patch);
                for r in 0..patch {
                    let start = (pr * patch + r) * img.width + pc * patch;
                    p.extend_from_slice(&img.pixels[start..start + patch]);
                }
                patches.push(p);
            }
        }
        Ok(Self {
            width: img.width,
            height: img.height,
            patch,
            maxval: img.maxval,
            patches,
        })
    }

    /// Index of the patch containing pixel `(row, col)`, and the offset within it.
    pub fn locate(&self, row: usize, col: usize) -> (usize, usize) {
        let per_row = self.width / self.patch;
        let idx = (row / self.patch) * per_row + col / self.patch;
        (idx, (row % self.patch) * self.patch + col % self.patch)
    }

    pub fn assemble(&self) -> Pgm {
        let mut pixels = vec![0u8; self.width * self.height];
        for row in 0..self.height {
            for col in 0..self.width {
                let (idx, off) = self.locate(row, col);
                pixels[row * self.width + col] = self.patches[idx][off];
            }
        }
        Pgm {
            width: self.width,
            height: self.height,
            maxval: self.maxval,
            pixels,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn reassembly_is_lossless(pw in 1usize..4, ph in 1usize..4, patch in 1usize..6, seed in any::<u64>()) {
            let (w, h) = (pw * patch, ph * patch);
            let pixels: Vec<u8> = (0..w * h).map(|i| (seed.wrapping_mul(i as u64 + 1) >> 7) as u8).collect();
            let img = Pgm::new(w, h, pixels);
            let set = ImagePatchSet::split(&img, patch).unwrap();
            prop_assert_eq!(set.patches.len(), pw * ph);
            prop_assert_eq!(set.assemble(), img);
        }
    }

    #[test]
    fn non_divisible_suggests_crop() {
        let img = Pgm::new(70, 64, vec![0; 70 * 64]);
        let msg = ImagePatchSet::split(&img, 64).unwrap_err();
        assert!(msg.contains("crop to 64x64"), "{msg}");
    }

    #[test]
    fn patch_order_is_row_major() {
        let img = Pgm::new(4, 2, (0..8).collect());
        let set = ImagePatchSet::split(&img, 2).unwrap();
        assert_eq!(set.patches, vec![vec![0, 1, 4, 5], vec![2, 3, 6, 7]]);
    }
}
