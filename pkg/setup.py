import sys

from setuptools import find_packages, setup

assert sys.version_info.major == 3 and sys.version_info.minor >= 9, \
    "Vision-State-Fusion uses Python 3.9 and above. "

with open('README.md', 'r') as f:
    # description from readme file
    long_description = f.read()


def get_extras_require() -> str:
    req = {
        "dev": [
            "flake8",
            "flake8-bugbear",
            "yapf",
            "isort",
            "pytest",
            "pytest-cov",
            "mypy",
            "pydocstyle",
            "doc8",
            "pre-commit",
        ],
    }
    return req


setup(
    name='vision_state_fusion',
    version='0.1.0',
    author='vision-state-fusion-contributors',
    description='A benchmark kit for fusing robot state estimates into '
    'visual pose regression networks.',
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=find_packages(exclude=['tests', 'tests.*']),
    include_package_data=True,
    package_data={
        '': ['docs/**/*'],
    },
    license='MIT license',
    install_requires=[
        'numpy>=1.25',
        'pybullet>=3.0.6',
        'scipy>=1.7',
        'matplotlib>=3.5',
    ],
    extras_require=get_extras_require(),
    entry_points={
        'console_scripts': ['vsf=vision_state_fusion.cli.main:main'],
    },
    python_requires='>=3.9',
    platforms=['Linux Ubuntu', 'darwin'],  # supports Linux and Mac OSX
    classifiers=[
        # How mature is this project? Common values are
        #   3 - Alpha
        #   4 - Beta
        #   5 - Production/Stable
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "Topic :: Scientific/Engineering :: Artificial Intelligence",
        "Topic :: Scientific/Engineering :: Image Recognition",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
    ],
)
