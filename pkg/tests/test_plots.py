from geointerp.plots import (save_cloud_figure, save_embedding_figure,
                             save_history_figure)


def test_cloud_figure_with_curves(rng, tmp_path):
    pts = rng.standard_normal((50, 3))
    curve = rng.standard_normal((11, 3))
    out = tmp_path / "cloud.png"
    save_cloud_figure(pts, out, curves=[("decoded", curve)])
    assert out.stat().st_size > 0


def test_cloud_figure_2d(rng, tmp_path):
    out = tmp_path / "flat.png"
    save_cloud_figure(rng.standard_normal((30, 2)), out)
    assert out.exists()


def test_embedding_figure(rng, tmp_path):
    out = tmp_path / "emb.png"
    save_embedding_figure(rng.standard_normal((40, 2)), out,
                          color=rng.random(40))
    assert out.exists()


def test_history_figure(tmp_path):
    history = [{"epoch": e, "rec": 1.0 / (e + 1), "lat": 0.5 / (e + 1)}
               for e in range(20)]
    out = tmp_path / "hist.png"
    save_history_figure(history, ["rec", "lat"], out)
    assert out.exists()
