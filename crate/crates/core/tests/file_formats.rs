//! Byte layouts decoded by hand, independently of the library reader.

use clan::inference::{BenignCentroid, CentroidCache};
use clan::model::{init, Checkpoint, MlpConfig};
use clan::numerics::Metric;
use clan::pipeline::Scaler;
use clan::{FORMAT_VERSION, MAGIC};

struct Cursor<'a>(&'a [u8]);

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> &[u8] {
        let (a, b) = self.0.split_at(n);
        self.0 = b;
        a
    }
    fn u32(&mut self) -> u32 {
        u32::from_le_bytes(self.take(4).try_into().unwrap())
    }
    fn u64(&mut self) -> u64 {
        u64::from_le_bytes(self.take(8).try_into().unwrap())
    }
    fn f64(&mut self) -> f64 {
        f64::from_le_bytes(self.take(8).try_into().unwrap())
    }
    fn tensor(&mut self) -> (u32, u32, Vec<f32>) {
        let (r, c) = (self.u32(), self.u32());
        let v = (0..r * c).map(|_| f32::from_le_bytes(self.take(4).try_into().unwrap())).collect();
        (r, c, v)
    }
}

#[test]
fn encoder_checkpoint_layout() {
    let config = MlpConfig { input_width: 3, hidden_width: 5, hidden_layers: 1, latent_width: 2, seed: 77 };
    let params = init(&config).unwrap();
    let scaler = Scaler { min: vec![0.0, 1.0, 2.0], max: vec![1.0, 2.0, 4.0] };
    let bytes = Checkpoint { config, metric: Metric::SquaredEuclidean, params: params.clone(), scaler: Some(scaler) }
        .to_bytes()
        .unwrap();

    let mut c = Cursor(&bytes);
    assert_eq!(c.take(8), MAGIC);
    assert_eq!(c.u32(), FORMAT_VERSION);
    assert_eq!(c.u32(), 1);
    assert_eq!([c.u64(), c.u64(), c.u64(), c.u64(), c.u64(), c.u64()], [3, 5, 1, 2, 77, 0]);
    assert_eq!(c.u32(), 6);
    for layer in &params.layers {
        let (r, k, w) = c.tensor();
        assert_eq!((r as usize, k as usize), layer.weight.shape());
        assert_eq!(w, layer.weight.as_slice());
        let (r, k, b) = c.tensor();
        assert_eq!((r, k as usize), (1, layer.bias.cols()));
        assert_eq!(b, layer.bias.as_slice());
    }
    assert_eq!(c.u32(), 1);
    assert_eq!(c.tensor(), (1, 3, vec![0.0, 1.0, 2.0]));
    assert_eq!(c.tensor(), (1, 3, vec![1.0, 2.0, 4.0]));
    assert!(c.0.is_empty());
}

#[test]
fn centroid_cache_layout() {
    let centroid = BenignCentroid::new(vec![0.5, -0.25], Metric::Cosine, 1.25).unwrap();
    let bytes = CentroidCache { centroid, scaler: None }.to_bytes().unwrap();
    let mut c = Cursor(&bytes);
    assert_eq!(c.take(8), MAGIC);
    assert_eq!((c.u32(), c.u32()), (FORMAT_VERSION, 2));
    assert_eq!(c.u32(), 1);
    assert_eq!(c.f64(), 1.25);
    assert_eq!(c.tensor(), (1, 2, vec![0.5, -0.25]));
    assert_eq!(c.tensor(), (0, 0, vec![]));
    assert_eq!(c.tensor(), (0, 0, vec![]));
    assert!(c.0.is_empty());
}
