"""Independent numpy model of the 6x6 Bloch problem.

Prints the reference numbers frozen into test_bloch.cpp: Chern numbers,
indirect gaps on a 48x48 grid, and K-point levels.
"""
import numpy as np

S3 = np.sqrt(3.0)
R1 = -np.array([1.0, S3])
R2 = np.array([2.0, 0.0])
B = 2 * np.pi * np.linalg.inv(np.array([R1, R2])).T
b1, b2 = B
ORIENT = np.sign(b1[0] * b2[1] - b1[1] * b2[0])


def hamiltonian(k, G, d_om, J=200.0, K=1.0, dth=2 * np.pi / 3, w_m=460.0):
    delta = -d_om - 2 * J - w_m - K
    h = np.zeros((6, 6), complex)
    for off, t in ((0, K), (3, J)):
        h[off, off + 1] = t * (1 + np.exp(-1j * k @ R1))
        h[off, off + 2] = t * (1 + np.exp(-1j * k @ (R1 + R2)))
        h[off + 1, off + 2] = t * (1 + np.exp(-1j * k @ R2))
    h = h + h.conj().T
    for s in range(3):
        h[s, s] = w_m
        h[3 + s, 3 + s] = -delta
        h[3 + s, s] = G * np.exp(1j * s * dth)
        h[s, 3 + s] = G * np.exp(-1j * s * dth)
    return h


def grid(N):
    return [i / N * b1 + j / N * b2 for i in range(N) for j in range(N)]


def chern(G, d_om, N, **kw):
    V = np.array([np.linalg.eigh(hamiltonian(k, G, d_om, **kw))[1] for k in grid(N)])
    V = V.reshape(N, N, 6, 6)
    out = []
    for n in range(6):
        tot = 0.0
        for i in range(N):
            for j in range(N):
                u = V[i, j, :, n]
                ux = V[(i + 1) % N, j, :, n]
                uy = V[i, (j + 1) % N, :, n]
                uxy = V[(i + 1) % N, (j + 1) % N, :, n]
                tot += np.angle((u.conj() @ ux) * (ux.conj() @ uxy) * (uxy.conj() @ uy) * (uy.conj() @ u))
        out.append(int(round(ORIENT * tot / (2 * np.pi))))
    return out


def gaps(G, d_om, N=48, **kw):
    E = np.array([np.linalg.eigvalsh(hamiltonian(k, G, d_om, **kw)) for k in grid(N)])
    return E[:, 1].min() - E[:, 0].max(), E[:, 2].min() - E[:, 1].max()


if __name__ == "__main__":
    print("chern G=2 d=3 N=24", chern(2, 3, 24))
    print("chern G=2 d=3 dth=-2pi/3 N=24", chern(2, 3, 24, dth=-2 * np.pi / 3))
    for d in (3, 4, 20):
        g12, g23 = gaps(2, d)
        print(f"gaps G=2 d={d}: gap_12={g12:.10f} gap_23={g23:.10f}")
    Kp = np.array([2 * np.pi / 3, 0.0])
    e = np.linalg.eigvalsh(hamiltonian(Kp, 0.2, 3))
    print("K-point split G=0.2 d=3:", e[2] - e[1], "levels", e[:3])
