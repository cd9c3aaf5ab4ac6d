import gzip

import numpy as np
import pytest

from wgelab.dataset import GroupKey
from wgelab.errors import EmptyGroup
from wgelab.io import MalformedFile, read_embeddings, scan_group_counts, write_embeddings
from wgelab.model import sample_dataset


@pytest.mark.parametrize("name", ["emb.csv", "emb.csv.gz"])
def test_round_trip_is_lossless(tmp_path, ref, name):
    ds = sample_dataset(ref, 500, 3)
    path = tmp_path / name
    write_embeddings(ds, path)
    back = read_embeddings(path)
    np.testing.assert_array_equal(back.x, ds.x)
    np.testing.assert_array_equal(back.y, ds.y)
    np.testing.assert_array_equal(back.d, ds.d)
    assert scan_group_counts(path) == ds.group_counts


def test_gzip_detected_by_content(tmp_path, ref):
    ds = sample_dataset(ref, 2000, 1)
    plain = tmp_path / "a.csv"
    write_embeddings(ds, plain)
    hidden = tmp_path / "b.csv"
    hidden.write_bytes(gzip.compress(plain.read_bytes()))
    np.testing.assert_array_equal(read_embeddings(hidden).x, ds.x)


def write(tmp_path, text):
    path = tmp_path / "f.csv"
    path.write_text(text)
    return path


@pytest.mark.parametrize("text", [
    "",
    "a,b,y,d\n1,2,0,S\n",
    "x_0,x_1,y\n1,2,0\n",
    "x_0,x_1,y,d\n1,2,0\n",
    "x_0,x_1,y,d\n1,zz,0,S\n",
    "x_0,x_1,y,d\n1,2,2,S\n",
    "x_0,x_1,y,d\n1,2,0,Q\n",
    "x_0,x_1,y,d\n1,nan,0,S\n",
    "x_0,x_1,y,d\n",
])
def test_malformed(tmp_path, text):
    with pytest.raises(MalformedFile):
        read_embeddings(write(tmp_path, text), require_all_groups=False)


def test_malformed_reports_line(tmp_path):
    path = write(tmp_path, "x_0,y,d\n1,0,S\n2,1,T\n3,1\n")
    with pytest.raises(MalformedFile, match=":4:"):
        read_embeddings(path)


def test_empty_group(tmp_path):
    path = write(tmp_path, "x_0,y,d\n1,0,S\n2,1,T\n3,1,S\n")
    with pytest.raises(EmptyGroup) as info:
        read_embeddings(path)
    assert info.value.counts[GroupKey(0, "T")] == 0
    ds = read_embeddings(path, require_all_groups=False)
    assert ds.n == 3 and ds.dim == 1
