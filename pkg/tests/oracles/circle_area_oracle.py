"""Independent oracle for the full-disk rasterization example.

A circle with normalized radius 1 maps to pixel radius size/2, so its area
in pixels is pi*(size/2)^2. Pixel-center rasterization counts the lattice
points of a disk (Gauss circle problem); the relative deviation from the
area shrinks like O(1/r), well under 2% for the sizes used in tests.
"""

import math

if __name__ == "__main__":
    for size in (32, 64, 128):
        r = size / 2.0
        c = (size - 1) / 2.0
        count = 0
        for i in range(size):
            for j in range(size):
                # pixel-center coordinates normalized so radius 1 = size/2
                x = (j - c) / r
                y = (i - c) / r
                if x * x + y * y <= 1.0:
                    count += 1
        area = math.pi * r * r
        print(
            f"size={size}: lattice count={count}, analytic area={area:.2f}, "
            f"rel dev={abs(count - area) / area:.4%}"
        )
