"""Гиперупругие определяющие соотношения.

Все функции работают с одним тензором F (d, d) или с набором (n, d, d).
Касательный модуль хранится как матрица (d^2, d^2) с построчной
нумерацией пар (ij), (kl): (A : M)_ij = A_ijkl M_kl.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

import numpy as np

from hho_hyperelastic.exceptions import ConfigError, NonPositiveJacobianError


def tensor_products(A: np.ndarray, B: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Три тензорных произведения матриц.

    (A x B)_ijkl = A_ij B_kl, (A x_ B)_ijkl = A_il B_jk, (A x^ B)_ijkl = A_ik B_jl.

    Args:
        A: Матрица (..., d, d)
        B: Матрица (..., d, d)

    Returns:
        Кортеж (обычное, нижнее, верхнее) произведений формы (..., d, d, d, d)
    """
    outer = np.einsum("...ij,...kl->...ijkl", A, B)
    under = np.einsum("...il,...jk->...ijkl", A, B)
    over = np.einsum("...ik,...jl->...ijkl", A, B)
    return outer, under, over


def double_contraction(A: np.ndarray, M: np.ndarray) -> np.ndarray:
    """A : M для тензора четвертого ранга (..., d, d, d, d)."""
    return np.einsum("...ijkl,...kl->...ij", A, M)


class DeformationGradient:
    """Градиент деформации с кэшированными J и F^{-T}.

    Attributes:
        F: Тензоры (n, d, d)

    Raises:
        NonPositiveJacobianError: Если det F <= 0 хотя бы в одной точке
    """

    def __init__(self, F: np.ndarray, cell: int | None = None) -> None:
        F = np.asarray(F, dtype=float)
        self.single = F.ndim == 2
        self.F = F[None] if self.single else F
        if np.any(~np.isfinite(self.J)) or np.any(self.J <= 0.0):
            raise NonPositiveJacobianError(
                f"Non-positive Jacobian det F = {float(np.min(self.J)):.3e}", cell=cell
            )

    @property
    def dim(self) -> int:
        return self.F.shape[-1]

    @cached_property
    def J(self) -> np.ndarray:
        return np.linalg.det(self.F)

    @cached_property
    def F_invT(self) -> np.ndarray:
        return np.linalg.inv(self.F).transpose(0, 2, 1)


class VolumetricLaw(Enum):
    """Функция объемной энергии Theta(J)."""

    LOG_J = "logJ"

    def theta(self, J: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Возвращает Theta(J), Theta'(J), Theta''(J)."""
        return np.log(J), 1.0 / J, -1.0 / J**2


@dataclass
class MaterialResponse:
    """Отклик материала в наборе точек.

    Attributes:
        psi: Плотность энергии (n,)
        P: Первый тензор напряжений Пиолы-Кирхгофа (n, d, d)
        A: Касательный модуль (n, d^2, d^2)
    """

    psi: np.ndarray
    P: np.ndarray
    A: np.ndarray

    @classmethod
    def from_tensors(cls, psi: np.ndarray, P: np.ndarray, A4: np.ndarray) -> MaterialResponse:
        n, d = P.shape[0], P.shape[-1]
        return cls(psi=psi, P=P, A=A4.reshape(n, d * d, d * d))

    @property
    def A4(self) -> np.ndarray:
        """Касательный модуль как тензор (n, d, d, d, d)."""
        d = self.P.shape[-1]
        return self.A.reshape(-1, d, d, d, d)

    def squeeze(self) -> MaterialResponse:
        """Отклик одной точки без ведущей оси."""
        return MaterialResponse(psi=self.psi[0], P=self.P[0], A=self.A[0])


def _finish(response: MaterialResponse, single: bool) -> MaterialResponse:
    return response.squeeze() if single else response


def evaluate_neohookean(
    F: np.ndarray,
    mu: float,
    lam: float,
    volumetric: VolumetricLaw = VolumetricLaw.LOG_J,
    cell: int | None = None,
) -> MaterialResponse:
    """Неогуковский закон Psi = mu/2 (F:F - d) - mu ln J + lam/2 Theta(J)^2.

    Raises:
        NonPositiveJacobianError: Если det F <= 0
    """
    defo = DeformationGradient(F, cell)
    Fm, J, FiT, d = defo.F, defo.J, defo.F_invT, defo.dim
    theta, dtheta, ddtheta = volumetric.theta(J)

    psi = 0.5 * mu * (np.einsum("nij,nij->n", Fm, Fm) - d) - mu * np.log(J) + 0.5 * lam * theta**2
    P = mu * (Fm - FiT) + (lam * J * theta * dtheta)[:, None, None] * FiT

    eye = np.broadcast_to(np.eye(d), Fm.shape)
    ii_over = tensor_products(eye, eye)[2]
    under_FiT = tensor_products(FiT, FiT.transpose(0, 2, 1))[1]
    vol = lam * (J * theta * (J * ddtheta + dtheta) + (J * dtheta) ** 2)
    bcast = (slice(None), None, None, None, None)
    A4 = (
        mu * (ii_over + under_FiT)
        - (lam * J * theta * dtheta)[bcast] * under_FiT
        + vol[bcast] * np.einsum("nij,nkl->nijkl", FiT, FiT)
    )
    return _finish(MaterialResponse.from_tensors(psi, P, A4), defo.single)


CAVITATION_FACTOR = 2.0 / 3.0**1.25


def evaluate_cavitation(
    F: np.ndarray, mu: float, lam: float, cell: int | None = None
) -> MaterialResponse:
    """Закон для кавитации Psi = 2 mu / 3^{5/4} (F:F)^{3/4} - mu ln J + lam/2 (ln J)^2.

    Raises:
        NonPositiveJacobianError: Если det F <= 0
    """
    defo = DeformationGradient(F, cell)
    Fm, J, FiT, d = defo.F, defo.J, defo.F_invT, defo.dim
    ff = np.einsum("nij,nij->n", Fm, Fm)
    log_j = np.log(J)

    psi = mu * CAVITATION_FACTOR * ff**0.75 - mu * log_j + 0.5 * lam * log_j**2
    c = mu * 3.0**-0.25
    P = (c * ff**-0.25)[:, None, None] * Fm + (lam * log_j - mu)[:, None, None] * FiT

    eye = np.broadcast_to(np.eye(d), Fm.shape)
    ii_over = tensor_products(eye, eye)[2]
    under_FiT = tensor_products(FiT, FiT.transpose(0, 2, 1))[1]
    bcast = (slice(None), None, None, None, None)
    A4 = (
        (c * ff**-0.25)[bcast] * ii_over
        - (0.5 * c * ff**-1.25)[bcast] * np.einsum("nij,nkl->nijkl", Fm, Fm)
        + (mu - lam * log_j)[bcast] * under_FiT
        + lam * np.einsum("nij,nkl->nijkl", FiT, FiT)
    )
    return _finish(MaterialResponse.from_tensors(psi, P, A4), defo.single)


def linear_elastic_tensor(dim: int, mu: float, lam: float) -> np.ndarray:
    """Тензор упругости mu (I x^ I + I x_ I) + lam I x I формы (d, d, d, d)."""
    eye = np.eye(dim)
    outer, under, over = tensor_products(eye, eye)
    return mu * (over + under) + lam * outer


def evaluate_linear_elastic(grad_u: np.ndarray, mu: float, lam: float) -> MaterialResponse:
    """Линейная упругость sigma = 2 mu sym(grad u) + lam tr(grad u) I."""
    H = np.asarray(grad_u, dtype=float)
    single = H.ndim == 2
    H = H[None] if single else H
    d = H.shape[-1]
    eps = 0.5 * (H + H.transpose(0, 2, 1))
    tr = np.trace(eps, axis1=1, axis2=2)
    sigma = 2.0 * mu * eps + lam * tr[:, None, None] * np.eye(d)
    psi = mu * np.einsum("nij,nij->n", eps, eps) + 0.5 * lam * tr**2
    A4 = np.broadcast_to(linear_elastic_tensor(d, mu, lam), (len(H), d, d, d, d))
    return _finish(MaterialResponse.from_tensors(psi, sigma, np.array(A4)), single)


def poisson_ratio(mu: float, lam: float) -> float:
    """Коэффициент Пуассона nu = lam / (2 (lam + mu))."""
    return lam / (2.0 * (lam + mu))


@dataclass(frozen=True)
class MaterialLaw(ABC):
    """Определяющее соотношение с параметрами Ламе.

    Attributes:
        mu: Модуль сдвига (> 0)
        lam: Первый параметр Ламе (>= 0)
    """

    mu: float
    lam: float

    def __post_init__(self) -> None:
        """Валидация параметров."""
        if not self.mu > 0.0:
            raise ValueError("mu must be positive")
        if not self.lam >= 0.0:
            raise ValueError("lam cannot be negative")

    @property
    @abstractmethod
    def name(self) -> str:
        """Имя закона."""
        ...

    @abstractmethod
    def evaluate(self, F: np.ndarray, cell: int | None = None) -> MaterialResponse:
        """Вычисляет отклик при градиенте деформации F.

        Raises:
            NonPositiveJacobianError: Если det F <= 0 (нелинейные законы)
        """
        ...

    @property
    def is_linear(self) -> bool:
        return False

    @property
    def poisson_ratio(self) -> float:
        return poisson_ratio(self.mu, self.lam)


@dataclass(frozen=True)
class NeohookeanLaw(MaterialLaw):
    volumetric: VolumetricLaw = field(default=VolumetricLaw.LOG_J)

    @property
    def name(self) -> str:
        return "neohookean"

    def evaluate(self, F: np.ndarray, cell: int | None = None) -> MaterialResponse:
        return evaluate_neohookean(F, self.mu, self.lam, self.volumetric, cell)


@dataclass(frozen=True)
class CavitationLaw(MaterialLaw):
    @property
    def name(self) -> str:
        return "cavitation"

    def evaluate(self, F: np.ndarray, cell: int | None = None) -> MaterialResponse:
        return evaluate_cavitation(F, self.mu, self.lam, cell)


@dataclass(frozen=True)
class LinearElasticLaw(MaterialLaw):
    """Линейная упругость; F интерпретируется как I + grad u."""

    @property
    def name(self) -> str:
        return "linear"

    @property
    def is_linear(self) -> bool:
        return True

    def evaluate(self, F: np.ndarray, cell: int | None = None) -> MaterialResponse:
        F = np.asarray(F, dtype=float)
        return evaluate_linear_elastic(F - np.eye(F.shape[-1]), self.mu, self.lam)


LAWS: dict[str, type[MaterialLaw]] = {
    "neohookean": NeohookeanLaw,
    "cavitation": CavitationLaw,
    "linear": LinearElasticLaw,
}


def make_law(name: str, mu: float, lam: float) -> MaterialLaw:
    """Создает закон по имени.

    Raises:
        ConfigError: Если имя закона неизвестно
    """
    try:
        law_class = LAWS[name]
    except KeyError:
        raise ConfigError(f"Unknown material law '{name}'. Known: {sorted(LAWS)}") from None
    return law_class(mu=mu, lam=lam)
