from setuptools import setup, find_packages
import sys, os.path

# Don't import phase_qubit module here, since deps may not be installed
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'phase_qubit'))
from version import VERSION

setup(name='phase-qubit',
    version=VERSION,
    description='Non-Hermitian two-level model of phase-qubit measurement by tunneling, with a scenario runner and Rabi-oscillation fitting.',
    license='MIT License',
    packages=[package for package in find_packages()
              if package.startswith('phase_qubit')],
    zip_safe=False,
    python_requires='>=3.8',
    install_requires=['numpy>=1.17', 'scipy>=1.1', 'gym>=0.8.0'],
    extras_require={'tests': ['pytest', 'hypothesis']},
    entry_points={'console_scripts': ['phase-qubit = phase_qubit.cli:main']},
)
