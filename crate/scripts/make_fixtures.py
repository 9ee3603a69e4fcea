"""Regenerates data/fixtures: synthetic traffic-scene JPEGs with captions.

Images are procedurally drawn and padded with JPEG comment segments to an
exact byte size; captions are assembled from a fixed vocabulary. Output is
deterministic for a given Pillow version, and manifest.csv records the sizes
that load_fixtures checks.
"""
import io
import random
import sys
from pathlib import Path

from PIL import Image, ImageDraw, ImageFilter

COLORS = ["red", "white", "black", "silver", "blue", "grey", "green", "yellow"]
KINDS = ["sedan", "hatchback", "SUV", "pickup truck", "van", "delivery truck", "coupe", "minibus"]
PLACES = ["in the first row", "near the entrance gate", "beside the lamp post", "in a reserved bay",
          "across two bays", "next to the pedestrian crossing", "by the exit ramp", "under the canopy"]
EXTRAS = ["A pedestrian is walking between the rows toward the exit.",
          "A cyclist is crossing the driveway from the left.",
          "The lane markings are faded but visible.",
          "A shopping trolley has been left near the kerb.",
          "Brake lights of one vehicle are on, suggesting it is about to leave.",
          "Puddles reflect the overhead lights on the asphalt.",
          "A barrier arm at the gate is raised.",
          "Two people are loading bags into an open boot."]


def caption(rng, target):
    parts = ["The image shows an outdoor parking area seen from a vehicle-mounted camera."]
    n = 0
    while len(" ".join(parts).encode()) < target + 200:
        n += 1
        parts.append(f"Vehicle {n} is a {rng.choice(COLORS)} {rng.choice(KINDS)} parked "
                     f"{rng.choice(PLACES)}, about {rng.randint(3, 60)} metres ahead.")
        if rng.random() < 0.3:
            parts.append(rng.choice(EXTRAS))
    text = " ".join(parts).encode()[:target]
    # end on a full stop without changing the length
    return text[:-1].decode("ascii") + "."


def scene(rng, w, h):
    img = Image.new("RGB", (w, h), (70, 72, 76))
    d = ImageDraw.Draw(img)
    d.rectangle([0, 0, w, h // 4], fill=(150, 180, 215))
    for x in range(0, w, w // 14):
        d.line([x, h // 4, x + w // 20, h], fill=(235, 235, 235), width=4)
    for _ in range(rng.randint(12, 30)):
        x, y = rng.randrange(w), rng.randrange(h // 4, h)
        cw, ch = rng.randint(w // 20, w // 9), rng.randint(h // 18, h // 8)
        col = tuple(rng.randrange(256) for _ in range(3))
        d.rounded_rectangle([x, y, x + cw, y + ch], radius=12, fill=col, outline=(20, 20, 20), width=3)
        d.rectangle([x + cw // 5, y + 4, x + 4 * cw // 5, y + ch // 3], fill=(40, 60, 80))
    noise = Image.effect_noise((w, h), 40).convert("RGB")
    img = Image.blend(img, noise, 0.25).filter(ImageFilter.SMOOTH)
    return img


def pad_jpeg(data, size):
    need = size - len(data)
    if need < 0:
        raise ValueError(f"encoded image already {len(data)} > {size}")
    segs = []
    while need > 0:
        take = min(need, 65537)
        if 0 < need - take < 4:
            take -= 4
        if take < 4:
            raise ValueError("cannot pad by fewer than 4 bytes")
        payload = take - 4
        segs.append(b"\xff\xfe" + (payload + 2).to_bytes(2, "big") + b"\x00" * payload)
        need -= take
    return data[:2] + b"".join(segs) + data[2:]


def encode(img, limit):
    for q in range(95, 10, -5):
        buf = io.BytesIO()
        img.save(buf, "JPEG", quality=q)
        if buf.tell() <= limit - 4:
            return buf.getvalue()
    raise ValueError("image too large")


def main(out):
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(20240517)
    specs = [("001", (1920, 1080), 628_736, 12_390),
             ("002", (1280, 720), 240_000, 3_100),
             ("003", (1280, 720), 310_500, 5_400),
             ("004", (1600, 900), 402_000, 6_900),
             ("005", (1024, 576), 180_250, 2_450)]
    rows = ["id,image_bytes,text_bytes"]
    for ident, (w, h), img_bytes, txt_bytes in specs:
        data = pad_jpeg(encode(scene(rng, w, h), img_bytes), img_bytes)
        text = caption(rng, txt_bytes)
        (out / f"{ident}.jpg").write_bytes(data)
        (out / f"{ident}.txt").write_bytes(text.encode("ascii"))
        rows.append(f"{ident},{len(data)},{len(text)}")
    (out / "manifest.csv").write_text("\n".join(rows) + "\n")


if __name__ == "__main__":
    main(Path(sys.argv[1] if len(sys.argv) > 1 else "data/fixtures"))
