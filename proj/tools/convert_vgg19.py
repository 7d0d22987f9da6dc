#!/usr/bin/env python3
"""Convert torchvision VGG-19 weights to the encoder's .wt file.

    python tools/convert_vgg19.py --out weights/vgg19_conv4_1.wt
    python tools/convert_vgg19.py --state-dict vgg19-dcbb9e9d.pth --out weights/vgg19_conv4_1.wt

Only the nine convolutions up to conv4_1 are kept.
"""
import argparse
import json
import struct

import numpy as np

# torchvision features.* index of each convolution
LAYERS = {
    "conv1_1": 0, "conv1_2": 2,
    "conv2_1": 5, "conv2_2": 7,
    "conv3_1": 10, "conv3_2": 12, "conv3_3": 14, "conv3_4": 16,
    "conv4_1": 19,
}


def load_state(path):
    import torch
    if path:
        state = torch.load(path, map_location="cpu")
    else:
        from torchvision.models import VGG19_Weights, vgg19
        state = vgg19(weights=VGG19_Weights.IMAGENET1K_V1).state_dict()
    return {k: v.detach().cpu().numpy() for k, v in state.items()}


def write_safetensors(path, tensors, metadata):
    header = {"__metadata__": metadata}
    blobs, offset = [], 0
    for name in sorted(tensors):
        arr = np.ascontiguousarray(tensors[name], dtype="<f4")
        raw = arr.tobytes()
        header[name] = {"dtype": "F32", "shape": list(arr.shape), "data_offsets": [offset, offset + len(raw)]}
        blobs.append(raw)
        offset += len(raw)
    text = json.dumps(header, separators=(",", ":")).encode()
    text += b" " * (-len(text) % 8)
    with open(path, "wb") as f:
        f.write(struct.pack("<Q", len(text)))
        f.write(text)
        for raw in blobs:
            f.write(raw)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--state-dict", help="local .pth file; default downloads through torchvision")
    ap.add_argument("--out", required=True)
    args = ap.parse_args()
    state = load_state(args.state_dict)
    out = {}
    for name, idx in LAYERS.items():
        out[f"{name}.weight"] = state[f"features.{idx}.weight"]
        out[f"{name}.bias"] = state[f"features.{idx}.bias"]
    out["preprocess.mean"] = np.array([0.485, 0.456, 0.406], dtype=np.float32)
    out["preprocess.std"] = np.array([0.229, 0.224, 0.225], dtype=np.float32)
    write_safetensors(args.out, out, {"source": "torchvision vgg19 IMAGENET1K_V1"})
    print(f"wrote {len(out)} tensors to {args.out}")


if __name__ == "__main__":
    main()
