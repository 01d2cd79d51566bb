use std::fmt;

use serde::{Deserialize, Serialize};

use super::MetadataError;

/// Non-drop-frame SMPTE-style timecode `HH:MM:SS:FF`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "TimecodeRepr", into = "TimecodeRepr")]
pub struct Timecode {
    hh: u32,
    mm: u32,
    ss: u32,
    ff: u32,
    fps_base: u32,
}

#[derive(Serialize, Deserialize)]
struct TimecodeRepr {
    text: String,
    fps_base: u32,
}

impl Timecode {
    pub fn new(hh: u32, mm: u32, ss: u32, ff: u32, fps_base: u32) -> Result<Self, MetadataError> {
        if fps_base == 0 {
            return Err(MetadataError::Timecode("fps_base must be positive".into()));
        }
        if mm >= 60 || ss >= 60 || ff >= fps_base {
            return Err(MetadataError::Timecode(format!("{hh:02}:{mm:02}:{ss:02}:{ff:02} out of range for {fps_base} fps")));
        }
        Ok(Self { hh, mm, ss, ff, fps_base })
    }

    pub fn zero(fps_base: u32) -> Result<Self, MetadataError> {
        Self::new(0, 0, 0, 0, fps_base)
    }

    /// Parses `HH:MM:SS:FF` (`;` accepted as the frame separator).
    pub fn parse(text: &str, fps_base: u32) -> Result<Self, MetadataError> {
        let bad = || MetadataError::Timecode(format!("malformed timecode {text:?}"));
        let parts: Vec<&str> = text.trim().split([':', ';']).collect();
        if parts.len() != 4 {
            return Err(bad());
        }
        let mut nums = [0u32; 4];
        for (slot, part) in nums.iter_mut().zip(&parts) {
            if part.is_empty() || !part.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            *slot = part.parse().map_err(|_| bad())?;
        }
        Self::new(nums[0], nums[1], nums[2], nums[3], fps_base)
    }

    pub fn hours(&self) -> u32 {
        self.hh
    }

    pub fn minutes(&self) -> u32 {
        self.mm
    }

    pub fn seconds(&self) -> u32 {
        self.ss
    }

    pub fn frames(&self) -> u32 {
        self.ff
    }

    pub fn fps_base(&self) -> u32 {
        self.fps_base
    }

    pub fn to_frame_count(&self) -> u64 {
        let secs = u64::from(self.hh) * 3600 + u64::from(self.mm) * 60 + u64::from(self.ss);
        secs * u64::from(self.fps_base) + u64::from(self.ff)
    }

    pub fn from_frame_count(frames: u64, fps_base: u32) -> Result<Self, MetadataError> {
        if fps_base == 0 {
            return Err(MetadataError::Timecode("fps_base must be positive".into()));
        }
        let fps = u64::from(fps_base);
        let ff = (frames % fps) as u32;
        let secs = frames / fps;
        let hh = u32::try_from(secs / 3600).map_err(|_| MetadataError::Timecode("frame count overflows timecode".into()))?;
        Self::new(hh, ((secs / 60) % 60) as u32, (secs % 60) as u32, ff, fps_base)
    }
}

impl fmt::Display for Timecode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02}:{:02}:{:02}:{:02}", self.hh, self.mm, self.ss, self.ff)
    }
}

impl From<Timecode> for TimecodeRepr {
    fn from(tc: Timecode) -> Self {
        Self { text: tc.to_string(), fps_base: tc.fps_base }
    }
}

impl TryFrom<TimecodeRepr> for Timecode {
    type Error = MetadataError;

    fn try_from(repr: TimecodeRepr) -> Result<Self, Self::Error> {
        Timecode::parse(&repr.text, repr.fps_base)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_out_of_range_fields() {
        assert!(Timecode::new(1, 60, 0, 0, 24).is_err());
        assert!(Timecode::new(1, 0, 60, 0, 24).is_err());
        assert!(Timecode::new(1, 0, 0, 24, 24).is_err());
        assert!(Timecode::parse("01:00:00", 24).is_err());
        assert!(Timecode::parse("01:0a:00:00", 24).is_err());
    }

    #[test]
    fn frame_count_conversion() {
        let tc = Timecode::parse("01:00:00:12", 24).unwrap();
        assert_eq!(tc.to_frame_count(), 3600 * 24 + 12);
        assert_eq!(Timecode::from_frame_count(tc.to_frame_count(), 24).unwrap(), tc);
    }

    proptest! {
        #[test]
        fn text_round_trip(hh in 0u32..100, mm in 0u32..60, ss in 0u32..60, fps in 1u32..121, ff_seed in 0u32..1000) {
            let tc = Timecode::new(hh, mm, ss, ff_seed % fps, fps).unwrap();
            prop_assert_eq!(Timecode::parse(&tc.to_string(), fps).unwrap(), tc);
        }
    }
}
